#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dekg/data.hpp"
#include "dekg/evaluation.hpp"
#include "dekg/training.hpp"

namespace dekg {

enum class SweepAxis { Gamma, Activation, Dropout };

std::string_view sweep_axis_name(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(std::string_view name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::Gamma;
  std::vector<std::string> values;
  TrainConfig base;
};

struct SweepPoint {
  std::string value;
  bool ok = false;
  std::string error;  // set when the sub-run failed
  int best_epoch = 0;
  RankingReport test;
};

/// Base config with one axis value substituted.
TrainConfig sweep_config(const SweepSpec& spec, std::string_view value);

/// Trains one model per value and evaluates it on the test split. A sub-run
/// that diverges is recorded and the sweep moves on.
std::vector<SweepPoint> run_sweep(const SweepSpec& spec, const Dataset& ds);

/// "axis,value,status,best_epoch,test_mrr,test_hit1,test_hit3,test_hit10"
std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& points);

struct CurveSeries {
  std::string name;
  std::vector<HistoryRow> rows;
  std::string error;
};

/// Validation MRR after every `validate_every` epochs for each model kind.
std::vector<CurveSeries> run_training_curves(const TrainConfig& base,
                                             const std::vector<ModelKind>& models,
                                             const Dataset& ds);

/// "model,epoch,loss,val_mrr"
std::string curves_csv(const std::vector<CurveSeries>& series);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal SVG line chart. `x_ticks`, when given, labels x = 0, 1, 2, ...
std::string svg_line_chart(const std::vector<ChartSeries>& series, std::string_view title,
                           std::string_view x_label, std::string_view y_label,
                           const std::vector<std::string>& x_ticks = {});

std::string sweep_svg(SweepAxis axis, const std::vector<SweepPoint>& points);
std::string curves_svg(const std::vector<CurveSeries>& series);

}  // namespace dekg
