#include "rqf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rqf {

namespace {

// Continued fraction for the regularized incomplete beta function
// (modified Lentz). Converges quickly for x < (a+1)/(a+b+2).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double_field(const std::string& field, const std::string& path, int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw std::runtime_error("metrics: " + path + " line " + std::to_string(line_no) +
                             ": cannot parse number from \"" + field + "\"");
  }
  return v;
}

long parse_long_field(const std::string& field, const std::string& path, int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw std::runtime_error("metrics: " + path + " line " + std::to_string(line_no) +
                             ": cannot parse integer from \"" + field + "\"");
  }
  return v;
}

void expect_header(std::ifstream& in, const std::string& expected, const std::string& path) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("metrics: " + path + ": empty file, expected header");
  }
  if (header != expected) {
    throw std::runtime_error("metrics: " + path + ": bad header \"" + header +
                             "\", expected \"" + expected + "\"");
  }
}

}  // namespace

double student_t_975(int dof) {
  if (dof < 1) {
    throw std::invalid_argument("metrics: student_t_975 needs dof >= 1, got " +
                                std::to_string(dof));
  }
  const double nu = dof;
  // P(T > t) = 0.5 * I_{nu/(nu+t^2)}(nu/2, 1/2) for t >= 0; solve for 0.025.
  const auto upper_tail = [nu](double t) {
    const double x = nu / (nu + t * t);
    return 0.5 * reg_inc_beta(nu / 2.0, 0.5, x);
  };
  double lo = 0.0;
  double hi = 2.0;
  while (upper_tail(hi) > 0.025) hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (upper_tail(mid) > 0.025) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  if (window < 1) {
    throw std::invalid_argument("metrics: moving_average window must be >= 1");
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i + 1 >= static_cast<std::size_t>(window)
                               ? i + 1 - static_cast<std::size_t>(window)
                               : 0;
    double sum = 0.0;
    for (std::size_t k = lo; k <= i; ++k) sum += values[k];
    out[i] = sum / static_cast<double>(i - lo + 1);
  }
  return out;
}

MeanCi mean_ci(const std::vector<double>& values) {
  if (values.empty()) {
    throw std::invalid_argument("metrics: mean_ci needs at least one value");
  }
  const int n = static_cast<int>(values.size());
  bool all_equal = true;
  for (const double v : values) {
    if (v != values.front()) {
      all_equal = false;
      break;
    }
  }
  // Identical inputs get an exact zero half-width rather than rounding dust.
  if (n == 1 || all_equal) {
    return {values.front(), 0.0};
  }
  double sum = 0.0;
  for (const double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  const double t = student_t_975(n - 1);
  return {mean, t * sd / std::sqrt(static_cast<double>(n))};
}

AggregateCurve aggregate_runs(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) {
    throw std::invalid_argument("metrics: aggregate_runs needs at least one run");
  }
  const std::size_t len = runs.front().size();
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].size() != len) {
      throw std::invalid_argument("metrics: aggregate_runs length mismatch: run 0 has " +
                                  std::to_string(len) + " points, run " + std::to_string(r) +
                                  " has " + std::to_string(runs[r].size()));
    }
  }
  AggregateCurve out;
  out.mean.resize(len);
  out.ci_half_width.resize(len);
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r][i];
    const MeanCi mc = mean_ci(column);
    out.mean[i] = mc.mean;
    out.ci_half_width[i] = mc.ci_half_width;
  }
  return out;
}

double stability_fraction(const std::vector<EpisodeTrace>& traces) {
  if (traces.empty()) {
    throw std::invalid_argument("metrics: stability_fraction needs at least one trace");
  }
  long stable = 0;
  for (const auto& t : traces) {
    if (!t.flipped) stable += 1;
  }
  return static_cast<double>(stable) / static_cast<double>(traces.size());
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void export_traces_csv(const std::vector<EpisodeTrace>& traces, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("metrics: cannot open " + path + " for writing");
  }
  out << "episode,step,x,y,reward,flipped\n";
  for (const auto& trace : traces) {
    for (const auto& s : trace.steps) {
      out << trace.episode << ',' << s.step << ',' << format_g17(s.x) << ','
          << format_g17(s.y) << ',' << format_g17(s.reward) << ','
          << (s.flipped ? 1 : 0) << '\n';
    }
  }
  if (!out) {
    throw std::runtime_error("metrics: write failed for " + path);
  }
}

std::vector<EpisodeTrace> read_traces_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("metrics: cannot open " + path);
  }
  expect_header(in, "episode,step,x,y,reward,flipped", path);
  std::vector<EpisodeTrace> traces;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    line_no += 1;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) {
      throw std::runtime_error("metrics: " + path + " line " + std::to_string(line_no) +
                               ": expected 6 fields, got " + std::to_string(fields.size()));
    }
    const long episode = parse_long_field(fields[0], path, line_no);
    TraceStep s;
    s.step = static_cast<int>(parse_long_field(fields[1], path, line_no));
    s.x = parse_double_field(fields[2], path, line_no);
    s.y = parse_double_field(fields[3], path, line_no);
    s.reward = parse_double_field(fields[4], path, line_no);
    s.flipped = parse_long_field(fields[5], path, line_no) != 0;
    if (traces.empty() || traces.back().episode != episode) {
      traces.push_back(EpisodeTrace{episode, {}, false});
    }
    if (s.flipped) traces.back().flipped = true;
    traces.back().steps.push_back(std::move(s));
  }
  return traces;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("metrics: cannot open " + path + " for writing");
  }
  out << "episode,train_reward_ma,eval_mean_reward,eval_stable_frac,loss\n";
  for (const auto& p : curve) {
    out << p.episode << ',' << format_g17(p.train_reward_ma) << ','
        << format_g17(p.eval_mean_reward) << ',' << format_g17(p.eval_stable_frac)
        << ',' << format_g17(p.loss) << '\n';
  }
  if (!out) {
    throw std::runtime_error("metrics: write failed for " + path);
  }
}

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("metrics: cannot open " + path);
  }
  expect_header(in, "episode,train_reward_ma,eval_mean_reward,eval_stable_frac,loss", path);
  std::vector<CurvePoint> curve;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    line_no += 1;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw std::runtime_error("metrics: " + path + " line " + std::to_string(line_no) +
                               ": expected 5 fields, got " + std::to_string(fields.size()));
    }
    CurvePoint p;
    p.episode = parse_long_field(fields[0], path, line_no);
    p.train_reward_ma = parse_double_field(fields[1], path, line_no);
    p.eval_mean_reward = parse_double_field(fields[2], path, line_no);
    p.eval_stable_frac = parse_double_field(fields[3], path, line_no);
    p.loss = parse_double_field(fields[4], path, line_no);
    curve.push_back(p);
  }
  return curve;
}

}  // namespace rqf
