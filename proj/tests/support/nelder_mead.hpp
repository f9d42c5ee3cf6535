#pragma once

// Plain Nelder-Mead minimizer used as an optimizer-independent oracle in the
// tests. Deliberately shares nothing with the library's fitting code.

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

namespace testsupport {

inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd x0, double step, int max_iter = 20000,
                                   double tol = 1e-13) {
    const int d = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> v(d + 1, x0);
    std::vector<double> fv(d + 1);
    for (int j = 0; j < d; ++j) v[j + 1][j] += step;
    for (int i = 0; i <= d; ++i) fv[i] = f(v[i]);

    for (int it = 0; it < max_iter; ++it) {
        // order ascending by value
        std::vector<int> idx(d + 1);
        for (int i = 0; i <= d; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        std::vector<Eigen::VectorXd> vs(d + 1);
        std::vector<double> fs(d + 1);
        for (int i = 0; i <= d; ++i) {
            vs[i] = v[idx[i]];
            fs[i] = fv[idx[i]];
        }
        v = vs;
        fv = fs;

        double spread = 0.0;
        for (int i = 1; i <= d; ++i)
            spread = std::max(spread, (v[i] - v[0]).cwiseAbs().maxCoeff());
        if (spread < tol && std::abs(fv[d] - fv[0]) < tol) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) centroid += v[i];
        centroid /= d;

        Eigen::VectorXd xr = centroid + (centroid - v[d]);
        double fr = f(xr);
        if (fr < fv[0]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - v[d]);
            double fe = f(xe);
            if (fe < fr) {
                v[d] = xe;
                fv[d] = fe;
            } else {
                v[d] = xr;
                fv[d] = fr;
            }
        } else if (fr < fv[d - 1]) {
            v[d] = xr;
            fv[d] = fr;
        } else {
            Eigen::VectorXd xc = centroid + 0.5 * (v[d] - centroid);
            double fc = f(xc);
            if (fc < fv[d]) {
                v[d] = xc;
                fv[d] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    v[i] = v[0] + 0.5 * (v[i] - v[0]);
                    fv[i] = f(v[i]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= d; ++i)
        if (fv[i] < fv[best]) best = i;
    return v[best];
}

// Two-stage search: a wide pass followed by a fine polish around the result.
inline Eigen::VectorXd minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Eigen::VectorXd& x0) {
    Eigen::VectorXd x = nelder_mead(f, x0, 0.5);
    x = nelder_mead(f, x, 0.01);
    return nelder_mead(f, x, 1e-4);
}

}  // namespace testsupport
