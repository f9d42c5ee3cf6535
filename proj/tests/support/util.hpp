#pragma once

// Shared test fixtures: a deterministic two-class study generator and a
// scoped temporary directory.

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccrisk/dataset.hpp"
#include "ccrisk/rng.hpp"

namespace testsupport {

// Gaussian features; class 1 is shifted by `sep` on feature 0 and by sep/2 on
// feature 1 (when present). Rows come class-0 first.
inline ccrisk::Study test_study(int n0, int n1, int p, std::uint64_t seed, double sep = 1.5) {
    ccrisk::SplitMix64 g(seed);
    const int n = n0 + n1;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = i < n0 ? 0 : 1;
        for (int j = 0; j < p; ++j) {
            double v = ccrisk::gaussian(g);
            if (y[i] == 1 && j == 0) v += sep;
            if (y[i] == 1 && j == 1) v += sep / 2.0;
            x(i, j) = v;
        }
    }
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) names.push_back("f" + std::to_string(j + 1));
    return ccrisk::make_study(std::move(x), std::move(y), std::move(names));
}

class TempDir {
  public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "ccrisk_test_XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string path() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace testsupport
