#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ccrisk/csv.hpp"
#include "ccrisk/errors.hpp"

// A small SVG writer: enough shapes and text for the report figures, nothing
// more. Coordinates are emitted with two decimals.

namespace ccrisk {

class SvgWriter {
  public:
    SvgWriter(double width, double height) : width_(width), height_(height) {}

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double stroke_width = 1.0) {
        body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
              << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
              << fmt(stroke_width) << "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none") {
        body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
              << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
              << "\"/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill) {
        body_ << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r)
              << "\" fill=\"" << fill << "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double stroke_width = 1.0) {
        body_ << "<polyline points=\"" << points(pts) << "\" fill=\"none\" stroke=\"" << stroke
              << "\" stroke-width=\"" << fmt(stroke_width) << "\"/>\n";
    }

    void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill,
                 const std::string& stroke = "none") {
        body_ << "<polygon points=\"" << points(pts) << "\" fill=\"" << fill << "\" stroke=\""
              << stroke << "\"/>\n";
    }

    // anchor: start | middle | end
    void text(double x, double y, const std::string& s, double size = 12.0,
              const std::string& anchor = "start", const std::string& fill = "#222") {
        body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << fmt(size)
              << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\"" << fill
              << "\">" << escape(s) << "</text>\n";
    }

    std::string str() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width_)
            << "\" height=\"" << fmt(height_) << "\" viewBox=\"0 0 " << fmt(width_) << " "
            << fmt(height_) << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw DataError("cannot open '" + path + "' for writing");
        f << str();
        if (!f) throw DataError("failed writing '" + path + "'");
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '&') out += "&amp;";
            else if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else out += c;
        }
        return out;
    }

  private:
    static std::string fmt(double v) { return format_fixed(v, 2); }

    static std::string points(const std::vector<std::pair<double, double>>& pts) {
        std::string s;
        for (const auto& [x, y] : pts) {
            if (!s.empty()) s += ' ';
            s += fmt(x) + "," + fmt(y);
        }
        return s;
    }

    double width_, height_;
    std::ostringstream body_;
};

// Shared linear map from a data range onto a pixel range.
struct LinearScale {
    double d0 = 0.0, d1 = 1.0;  // data
    double r0 = 0.0, r1 = 1.0;  // pixels

    double operator()(double v) const { return r0 + (v - d0) / (d1 - d0) * (r1 - r0); }
};

}  // namespace ccrisk
