#pragma once

#include <Eigen/Core>

#include <limits>
#include <string>
#include <vector>

namespace rqf {

// Window for train-reward moving averages, matching the evaluation cadence.
inline constexpr int kMovingAverageWindow = 100;

struct TraceStep {
  int step = 0;  // 0 is the starting-position row
  double x = 0.0;
  double y = 0.0;
  double reward = 0.0;           // 0 for the starting row
  Eigen::MatrixXd joint_action;  // action_dim x n_agents; empty for the starting row
  bool flipped = false;
};

struct EpisodeTrace {
  long episode = 0;
  std::vector<TraceStep> steps;  // starting row plus one row per env step
  bool flipped = false;
};

// One learning-curve row per training episode. Evaluation columns carry the
// most recent evaluation and are NaN before the first one; loss is the mean
// update loss during the episode, NaN when no update ran.
struct CurvePoint {
  long episode = 0;
  double train_reward_ma = 0.0;
  double eval_mean_reward = std::numeric_limits<double>::quiet_NaN();
  double eval_stable_frac = std::numeric_limits<double>::quiet_NaN();
  double loss = std::numeric_limits<double>::quiet_NaN();
};

struct MeanCi {
  double mean = 0.0;
  double ci_half_width = 0.0;
};

struct AggregateCurve {
  std::vector<double> mean;
  std::vector<double> ci_half_width;
};

// 97.5% quantile of Student's t with dof degrees of freedom (the multiplier
// for two-sided 95% intervals), via bisection on the regularized incomplete
// beta representation of the CDF.
double student_t_975(int dof);

// Trailing moving average: out[i] = mean(values[max(0, i-window+1) .. i]).
std::vector<double> moving_average(const std::vector<double>& values, int window);

// Mean and 95% CI half-width (Student-t, n-1 dof). Half-width is exactly 0
// for a single value and for bitwise-identical values.
MeanCi mean_ci(const std::vector<double>& values);

// Pointwise mean_ci across runs. All runs must have equal length.
AggregateCurve aggregate_runs(const std::vector<std::vector<double>>& runs);

// Fraction of traces that never flipped.
double stability_fraction(const std::vector<EpisodeTrace>& traces);

// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_g17(double v);

// Trajectory CSV: header episode,step,x,y,reward,flipped; one row per trace
// step including the starting row. Reading back drops joint actions (they
// are not part of the file format).
void export_traces_csv(const std::vector<EpisodeTrace>& traces, const std::string& path);
std::vector<EpisodeTrace> read_traces_csv(const std::string& path);

// Learning-curve CSV: header episode,train_reward_ma,eval_mean_reward,
// eval_stable_frac,loss; values serialized with format_g17.
void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);
std::vector<CurvePoint> read_curve_csv(const std::string& path);

}  // namespace rqf
