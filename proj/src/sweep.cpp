#include "dekg/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dekg/config.hpp"
#include "dekg/error.hpp"

namespace dekg {

std::string_view sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Gamma: return "gamma";
    case SweepAxis::Activation: return "activation";
    case SweepAxis::Dropout: return "dropout";
  }
  return "?";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
  for (auto a : {SweepAxis::Gamma, SweepAxis::Activation, SweepAxis::Dropout}) {
    if (name == sweep_axis_name(a)) return a;
  }
  return std::nullopt;
}

TrainConfig sweep_config(const SweepSpec& spec, std::string_view value) {
  TrainConfig c = spec.base;
  apply_config(c, {{std::string(sweep_axis_name(spec.axis)), std::string(value)}});
  c.validate();
  return c;
}

std::vector<SweepPoint> run_sweep(const SweepSpec& spec, const Dataset& ds) {
  if (spec.values.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one value");
  std::vector<TrainConfig> configs;
  for (const auto& v : spec.values) configs.push_back(sweep_config(spec, v));
  const FilterIndex filter = build_filter_index(ds);
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    SweepPoint p;
    p.value = spec.values[i];
    try {
      const auto result = train(configs[i], ds);
      EvalOptions opts;
      opts.threads = configs[i].deterministic ? 1 : configs[i].threads;
      p.test = evaluate(result.params, ds, Split::Test, filter, opts);
      p.best_epoch = result.best_epoch;
      p.ok = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numeric) throw;
      p.error = e.what();
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "axis,value,status,best_epoch,test_mrr,test_hit1,test_hit3,test_hit10\n";
  for (const auto& p : points) {
    out << sweep_axis_name(axis) << ',' << p.value << ',';
    if (p.ok) {
      out << "ok," << p.best_epoch << ',' << fmt(p.test.mrr) << ',' << fmt(p.test.hit1) << ','
          << fmt(p.test.hit3) << ',' << fmt(p.test.hit10) << '\n';
    } else {
      out << "diverged,,,,,\n";
    }
  }
  return out.str();
}

std::vector<CurveSeries> run_training_curves(const TrainConfig& base,
                                             const std::vector<ModelKind>& models,
                                             const Dataset& ds) {
  if (models.empty()) throw Error(ErrorKind::InvalidArgument, "curve needs at least one model");
  std::vector<CurveSeries> out;
  for (auto kind : models) {
    TrainConfig c = base;
    c.model.kind = kind;
    c.model.diachronic_relations = c.model.diachronic_relations && is_diachronic(kind);
    c.validate();
    CurveSeries s;
    s.name = std::string(model_kind_name(kind));
    try {
      s.rows = train(c, ds).history;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numeric) throw;
      s.error = e.what();
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string curves_csv(const std::vector<CurveSeries>& series) {
  std::ostringstream out;
  out << "model,epoch,loss,val_mrr\n";
  for (const auto& s : series) {
    for (const auto& r : s.rows) {
      out << s.name << ',' << r.epoch << ',' << fmt(r.loss) << ',' << fmt(r.val_mrr) << '\n';
    }
  }
  return out.str();
}

std::string svg_line_chart(const std::vector<ChartSeries>& series, std::string_view title,
                           std::string_view x_label, std::string_view y_label,
                           const std::vector<std::string>& x_ticks) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 60;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.05, y1 += 0.05;
  y0 = std::min(y0, 0.0);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream out;
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">", (L + W - R) / 2);
  out << buf << escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                L, H - B, W - R, H - B, L, T, L, H - B);
  out << buf;
  for (int i = 0; i <= 5; ++i) {
    const double y = y0 + (y1 - y0) * i / 5.0;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3f</text>\n",
                  L, py(y), W - R, py(y), L - 6, py(y) + 4, y);
    out << buf;
  }
  if (!x_ticks.empty()) {
    for (std::size_t i = 0; i < x_ticks.size(); ++i) {
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">", px(static_cast<double>(i)), H - B + 18);
      out << buf << escape(x_ticks[i]) << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 5; ++i) {
      const double x = x0 + (x1 - x0) * i / 5.0;
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%g</text>\n", px(x), H - B + 18, x);
      out << buf;
    }
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">", (L + W - R) / 2, H - 16);
  out << buf << escape(x_label) << "</text>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"18\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 18 %.1f)\">",
                (T + H - B) / 2, (T + H - B) / 2);
  out << buf << escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(series[s].x[i]), py(series[s].y[i]));
      out << buf;
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n",
                    px(series[s].x[i]), py(series[s].y[i]), color);
      out << buf;
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(s);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\">",
                  W - R + 12, ly, W - R + 32, ly, color, W - R + 38, ly + 4);
    out << buf << escape(series[s].name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string sweep_svg(SweepAxis axis, const std::vector<SweepPoint>& points) {
  ChartSeries s;
  s.name = "test MRR";
  std::vector<std::string> ticks;
  const bool categorical = axis == SweepAxis::Activation;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = categorical ? static_cast<double>(i) : std::stod(points[i].value);
    s.x.push_back(x);
    s.y.push_back(points[i].ok ? points[i].test.mrr : NAN);
    if (categorical) ticks.push_back(points[i].value);
  }
  return svg_line_chart({s}, std::string("Test MRR by ") + std::string(sweep_axis_name(axis)),
                        sweep_axis_name(axis), "MRR", ticks);
}

std::string curves_svg(const std::vector<CurveSeries>& series) {
  std::vector<ChartSeries> chart;
  for (const auto& c : series) {
    ChartSeries s;
    s.name = c.name;
    for (const auto& r : c.rows) {
      s.x.push_back(r.epoch);
      s.y.push_back(r.val_mrr);
    }
    chart.push_back(std::move(s));
  }
  return svg_line_chart(chart, "Validation MRR during training", "epoch", "MRR");
}

}  // namespace dekg
