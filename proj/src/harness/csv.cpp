#include <charconv>
#include <fstream>
#include <sstream>

#include "pbvf/errors.hpp"
#include "pbvf/harness.hpp"

namespace pbvf {

namespace {

constexpr const char* kCurveHeader = "env_steps,mean_return,std_return";
constexpr const char* kSummaryHeader =
    "algo,env,arch,seed_count,avg_metric_mean,avg_metric_std,final_metric_mean,final_metric_std";
constexpr const char* kLandscapeHeader = "theta_w,theta_b,true_J,predicted_V";
constexpr const char* kOracleHeader = "instance,thm1_maxerr,thm3_maxerr,degris_bias";
constexpr const char* kTrajectoryHeader = "episode,theta_w,theta_b";

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Rows of a CSV with the given header; every row has exactly `columns` fields.
std::vector<std::vector<std::string>> read_rows(const std::string& path, const char* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw InputError(path + ": unexpected header '" + line + "'");
  const std::size_t columns = split_fields(header).size();
  std::vector<std::vector<std::string>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != columns) {
      throw InputError(path + ": line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(columns));
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

long parse_long(const std::string& text) {
  long v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) throw InputError("not an integer: '" + text + "'");
  return v;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("format_number failed");
  return std::string(buf, p);
}

double parse_number(const std::string& text) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || b == e) throw InputError("not a number: '" + text + "'");
  return v;
}

void write_curve_csv(const std::string& path, const LearningCurve& curve) {
  auto out = open_out(path);
  out << kCurveHeader << '\n';
  for (const EvalPoint& p : curve) {
    out << p.env_steps << ',' << format_number(p.mean_return) << ',' << format_number(p.std_return) << '\n';
  }
  close_out(out, path);
}

LearningCurve read_curve_csv(const std::string& path) {
  LearningCurve curve;
  for (const auto& r : read_rows(path, kCurveHeader)) {
    EvalPoint p;
    p.env_steps = parse_long(r[0]);
    p.mean_return = parse_number(r[1]);
    p.std_return = parse_number(r[2]);
    curve.push_back(p);
  }
  return curve;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  auto out = open_out(path);
  out << kSummaryHeader << '\n';
  for (const SummaryRow& r : rows) {
    out << r.algo << ',' << r.env << ',' << r.arch << ',' << r.seed_count << ',' << format_number(r.avg_metric_mean)
        << ',' << format_number(r.avg_metric_std) << ',' << format_number(r.final_metric_mean) << ','
        << format_number(r.final_metric_std) << '\n';
  }
  close_out(out, path);
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::vector<SummaryRow> rows;
  for (const auto& f : read_rows(path, kSummaryHeader)) {
    SummaryRow r;
    r.algo = f[0];
    r.env = f[1];
    r.arch = f[2];
    r.seed_count = static_cast<int>(parse_long(f[3]));
    r.avg_metric_mean = parse_number(f[4]);
    r.avg_metric_std = parse_number(f[5]);
    r.final_metric_mean = parse_number(f[6]);
    r.final_metric_std = parse_number(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_landscape_csv(const std::string& path, const std::vector<LandscapeRow>& rows) {
  auto out = open_out(path);
  out << kLandscapeHeader << '\n';
  for (const LandscapeRow& r : rows) {
    out << format_number(r.theta_w) << ',' << format_number(r.theta_b) << ',' << format_number(r.true_j) << ','
        << format_number(r.predicted_v) << '\n';
  }
  close_out(out, path);
}

std::vector<LandscapeRow> read_landscape_csv(const std::string& path) {
  std::vector<LandscapeRow> rows;
  for (const auto& f : read_rows(path, kLandscapeHeader)) {
    rows.push_back({parse_number(f[0]), parse_number(f[1]), parse_number(f[2]), parse_number(f[3])});
  }
  return rows;
}

void write_oracle_csv(const std::string& path, const std::vector<OracleRow>& rows) {
  auto out = open_out(path);
  out << kOracleHeader << '\n';
  for (const OracleRow& r : rows) {
    out << r.instance << ',' << format_number(r.thm1_maxerr) << ',' << format_number(r.thm3_maxerr) << ','
        << format_number(r.degris_bias) << '\n';
  }
  close_out(out, path);
}

std::vector<OracleRow> read_oracle_csv(const std::string& path) {
  std::vector<OracleRow> rows;
  for (const auto& f : read_rows(path, kOracleHeader)) {
    rows.push_back({static_cast<int>(parse_long(f[0])), parse_number(f[1]), parse_number(f[2]), parse_number(f[3])});
  }
  return rows;
}

void write_trajectory_csv(const std::string& path, const std::vector<Vector>& thetas) {
  auto out = open_out(path);
  out << kTrajectoryHeader << '\n';
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i].size() != 2) throw ShapeError("trajectory rows need 2-parameter policies");
    out << i << ',' << format_number(thetas[i][0]) << ',' << format_number(thetas[i][1]) << '\n';
  }
  close_out(out, path);
}

}  // namespace pbvf
