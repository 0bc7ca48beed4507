#include "learnsysid/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace learnsysid {
namespace plot {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  double px0 = 0.0, px1 = 1.0;
  double map(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }
};

// Pads a [lo, hi] data range so flat series still get a visible band.
void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double w = std::max(1.0, std::abs(hi));
    lo -= 0.1 * w;
    hi += 0.1 * w;
    return;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

void polyline(std::ofstream& out, const Axis& xa, const Axis& ya,
              const std::vector<double>& xs, const std::vector<double>& ys,
              const char* color, double width, const char* dash = nullptr) {
  if (xs.empty()) return;
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt(width)
      << "\"";
  if (dash) out << " stroke-dasharray=\"" << dash << "\"";
  out << " points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ' ';
    out << fmt(xa.map(xs[i])) << ',' << fmt(ya.map(ys[i]));
  }
  out << "\"/>\n";
}

void text(std::ofstream& out, double x, double y, const std::string& s, int size = 11,
          const char* anchor = "start", const char* color = "#333333") {
  out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
      << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\"" << color
      << "\">" << s << "</text>\n";
}

}  // namespace

void plot_overlay(const Mat& truth, const Mat& adapt_pred, const Mat& gen_pred,
                  const std::string& path, const std::vector<std::string>& dim_names) {
  const long N = truth.rows();
  const long I = truth.cols();
  if (N == 0 || I == 0) throw std::invalid_argument("plot_overlay: empty truth series");
  const long Na = adapt_pred.rows();
  const long Ng = gen_pred.rows();
  if (adapt_pred.cols() != I || (Ng > 0 && gen_pred.cols() != I))
    throw std::invalid_argument("plot_overlay: prediction width does not match truth");
  if (Na + Ng != N)
    throw std::invalid_argument("plot_overlay: prediction rows " + std::to_string(Na + Ng) +
                                " do not cover truth rows " + std::to_string(N));

  const double panel_w = 820.0, panel_h = 140.0, left = 64.0, top = 34.0, gap = 26.0;
  const double width = left + panel_w + 16.0;
  const double height = top + I * panel_h + (I - 1) * gap + 30.0;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("plot_overlay: cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  text(out, left, 16.0, "truth", 11, "start", "#9a9a9a");
  text(out, left + 50.0, 16.0, "adaptation", 11, "start", "#1f77b4");
  if (Ng > 0) text(out, left + 130.0, 16.0, "generalization", 11, "start", "#d62728");

  std::vector<double> idx(static_cast<std::size_t>(N));
  for (long i = 0; i < N; ++i) idx[static_cast<std::size_t>(i)] = static_cast<double>(i);

  for (long d = 0; d < I; ++d) {
    const double py0 = top + d * (panel_h + gap);
    Axis xa{0.0, static_cast<double>(N - 1 > 0 ? N - 1 : 1), left, left + panel_w};
    double lo = truth.col(d).minCoeff(), hi = truth.col(d).maxCoeff();
    if (Na > 0) {
      lo = std::min(lo, adapt_pred.col(d).minCoeff());
      hi = std::max(hi, adapt_pred.col(d).maxCoeff());
    }
    if (Ng > 0) {
      lo = std::min(lo, gen_pred.col(d).minCoeff());
      hi = std::max(hi, gen_pred.col(d).maxCoeff());
    }
    pad_range(lo, hi);
    Axis ya{lo, hi, py0 + panel_h, py0};  // SVG y grows downward

    out << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(py0) << "\" width=\"" << fmt(panel_w)
        << "\" height=\"" << fmt(panel_h) << "\" fill=\"none\" stroke=\"#dddddd\"/>\n";

    std::vector<double> ys(static_cast<std::size_t>(N));
    for (long i = 0; i < N; ++i) ys[static_cast<std::size_t>(i)] = truth(i, d);
    polyline(out, xa, ya, idx, ys, "#c8c8c8", 4.0);

    if (Na > 0) {
      std::vector<double> xs(idx.begin(), idx.begin() + Na);
      std::vector<double> ps(static_cast<std::size_t>(Na));
      for (long i = 0; i < Na; ++i) ps[static_cast<std::size_t>(i)] = adapt_pred(i, d);
      polyline(out, xa, ya, xs, ps, "#1f77b4", 1.2);
    }
    if (Ng > 0) {
      std::vector<double> xs(idx.begin() + Na, idx.end());
      std::vector<double> ps(static_cast<std::size_t>(Ng));
      for (long i = 0; i < Ng; ++i) ps[static_cast<std::size_t>(i)] = gen_pred(i, d);
      polyline(out, xa, ya, xs, ps, "#d62728", 1.2);
      const double split = xa.map(static_cast<double>(Na));
      out << "<line x1=\"" << fmt(split) << "\" y1=\"" << fmt(py0) << "\" x2=\"" << fmt(split)
          << "\" y2=\"" << fmt(py0 + panel_h) << "\" stroke=\"#888888\" stroke-dasharray=\"4,3\"/>\n";
    }

    const std::string label = d < static_cast<long>(dim_names.size())
                                  ? dim_names[static_cast<std::size_t>(d)]
                                  : "y" + std::to_string(d);
    text(out, 8.0, py0 + 12.0, label, 12);
    text(out, left - 6.0, py0 + 10.0, fmt(hi), 10, "end", "#777777");
    text(out, left - 6.0, py0 + panel_h, fmt(lo), 10, "end", "#777777");
  }
  text(out, left, height - 10.0, "sample index", 11, "start", "#777777");
  out << "</svg>\n";
}

void plot_basis(const model::LearnedModel& m, double lo, double hi, int samples,
                const std::string& base) {
  if (samples < 2) throw std::invalid_argument("plot_basis: need at least 2 samples");
  if (!(hi > lo)) throw std::invalid_argument("plot_basis: empty grid range");

  const long S = samples;
  Mat grid(S, 1);
  for (long i = 0; i < S; ++i)
    grid(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(S - 1);

  // One column per plotted curve, in CSV order after the x column.
  std::vector<std::string> names;
  std::vector<Mat> curves;  // each S x 1
  auto push = [&](const std::string& n, const Mat& c) {
    names.push_back(n);
    curves.push_back(c);
  };

  if (m.frozen_trig) {
    push("m1", grid.array().sin().matrix());
    push("m2", grid.array().cos().matrix());
  } else if (m.basis.mode == model::BasisNet::Mode::Elementwise) {
    ad::Tape t;
    ad::Node* h = mlp_forward(t, make_leaves(t, m.basis.psi), "basis", ad::constant(t, grid),
                              m.basis.spec(m.form));
    for (long p = 0; p < m.basis.P; ++p) push("m" + std::to_string(p + 1), h->value.col(p));
  } else {
    // Partial dependence: sweep one input over the grid, hold the rest at zero.
    for (long j = 0; j < m.form.width(); ++j) {
      Mat X = Mat::Zero(S, m.form.width());
      X.col(j) = grid.col(0);
      ad::Tape t;
      ad::Node* h = mlp_forward(t, make_leaves(t, m.basis.psi), "basis", ad::constant(t, X),
                                m.basis.spec(m.form));
      for (long p = 0; p < m.basis.P; ++p)
        push("m" + std::to_string(p + 1) + "_x" + std::to_string(j + 1), h->value.col(p));
    }
  }
  push("sin", grid.array().sin().matrix());
  push("cos", grid.array().cos().matrix());

  std::ofstream csv(base + ".csv");
  if (!csv) throw std::runtime_error("plot_basis: cannot write " + base + ".csv");
  csv << "x";
  for (const auto& n : names) csv << ',' << n;
  csv << '\n';
  char buf[32];
  for (long i = 0; i < S; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", grid(i, 0));
    csv << buf;
    for (const auto& c : curves) {
      std::snprintf(buf, sizeof(buf), "%.17g", c(i, 0));
      csv << ',' << buf;
    }
    csv << '\n';
  }
  csv.close();

  const double panel_w = 640.0, panel_h = 360.0, left = 60.0, top = 30.0;
  const double width = left + panel_w + 170.0;
  const double height = top + panel_h + 40.0;

  std::ofstream out(base + ".svg");
  if (!out) throw std::runtime_error("plot_basis: cannot write " + base + ".svg");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  double ymin = -1.0, ymax = 1.0;
  for (const auto& c : curves) {
    ymin = std::min(ymin, c.minCoeff());
    ymax = std::max(ymax, c.maxCoeff());
  }
  pad_range(ymin, ymax);
  Axis xa{lo, hi, left, left + panel_w};
  Axis ya{ymin, ymax, top + panel_h, top};

  out << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(panel_w)
      << "\" height=\"" << fmt(panel_h) << "\" fill=\"none\" stroke=\"#dddddd\"/>\n";
  if (ymin < 0.0 && ymax > 0.0) {
    const double zero = ya.map(0.0);
    out << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(zero) << "\" x2=\""
        << fmt(left + panel_w) << "\" y2=\"" << fmt(zero) << "\" stroke=\"#eeeeee\"/>\n";
  }

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::vector<double> xs(static_cast<std::size_t>(S));
  for (long i = 0; i < S; ++i) xs[static_cast<std::size_t>(i)] = grid(i, 0);

  const std::size_t learned = names.size() - 2;  // trailing sin, cos are references
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<double> ys(static_cast<std::size_t>(S));
    for (long i = 0; i < S; ++i) ys[static_cast<std::size_t>(i)] = curves[k](i, 0);
    const bool ref = k >= learned;
    const char* color = ref ? "#aaaaaa" : kPalette[k % 8];
    polyline(out, xa, ya, xs, ys, color, ref ? 1.0 : 1.5, ref ? "5,4" : nullptr);
    const double ly = top + 14.0 + 14.0 * static_cast<double>(k);
    if (ly < top + panel_h)
      text(out, left + panel_w + 12.0, ly, names[k], 11, "start", color);
  }

  text(out, left - 6.0, top + 10.0, fmt(ymax), 10, "end", "#777777");
  text(out, left - 6.0, top + panel_h, fmt(ymin), 10, "end", "#777777");
  text(out, left, height - 12.0, fmt(lo), 10, "middle", "#777777");
  text(out, left + panel_w, height - 12.0, fmt(hi), 10, "middle", "#777777");
  if (!m.frozen_trig && m.basis.mode == model::BasisNet::Mode::Vector)
    text(out, left, 16.0, "vector-mode partial dependence, other inputs held at 0", 11, "start",
         "#555555");
  out << "</svg>\n";
}

}  // namespace plot
}  // namespace learnsysid
