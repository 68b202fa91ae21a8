#include "lilab/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace lilab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

class Csv {
 public:
  Csv(const std::filesystem::path& file, const std::vector<std::string>& header) : out_(file, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + file.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace

void write_condition_csv(const std::filesystem::path& file, const std::vector<ConditionReport>& reports) {
  Csv csv(file, {"condition", "n", "term", "partial_sum", "tail_bound", "verdict"});
  for (const auto& r : reports) {
    const std::string tail = r.tail_bound ? format_double(*r.tail_bound) : "unknown";
    for (const auto& row : r.rows)
      csv.row({r.condition, std::to_string(row.n), format_double(row.term), format_double(row.partial_sum), tail,
               to_string(r.verdict)});
    const double last = r.rows.empty() ? 0.0 : r.rows.back().partial_sum;
    std::string cert = r.certificate;
    for (char& c : cert)
      if (c == ',' || c == '\n') c = ';';
    csv.row({r.condition, "tail", cert, format_double(last), tail, to_string(r.verdict)});
  }
}

std::vector<std::string> write_bundle(const std::filesystem::path& dir, const ReportBundle& bundle,
                                      const std::vector<StatisticSpec>& statistics) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  auto open = [&](const std::string& name, const std::vector<std::string>& header) {
    files.push_back(name);
    return Csv(dir / name, header);
  };

  {
    Csv csv = open("counts.csv", {"key", "count"});
    for (const auto& [k, v] : bundle.accumulator.counts) csv.row({k, std::to_string(v)});
  }
  {
    Csv csv = open("maxima.csv", {"key", "max"});
    for (const auto& [k, v] : bundle.accumulator.maxima) csv.row({k, format_double(v)});
  }
  {
    Csv csv = open("histograms.csv", {"statistic", "bin", "lower", "upper", "count"});
    for (const auto& [id, h] : bundle.accumulator.histograms) {
      csv.row({id, "zero", "0", "0", std::to_string(h.zero)});
      csv.row({id, "underflow", "0", format_double(h.lo), std::to_string(h.underflow)});
      for (std::size_t b = 0; b < kHistogramBins; ++b)
        csv.row({id, std::to_string(b), format_double(h.lower_edge(b)), format_double(h.upper_edge(b)),
                 std::to_string(h.bins[b])});
      csv.row({id, "overflow", format_double(h.hi), "inf", std::to_string(h.overflow)});
    }
  }
  for (const auto& s : statistics) {
    auto it = bundle.accumulator.tables.find(s.id);
    if (it == bundle.accumulator.tables.end()) continue;
    const std::size_t width = it->second.empty() ? 0 : it->second.begin()->second.size();
    std::vector<std::string> header{"path"};
    for (auto& c : table_columns(s, width, width)) header.push_back(c);
    Csv csv = open("paths_" + s.id + ".csv", header);
    for (const auto& [path, row] : it->second) {
      std::vector<std::string> cells{std::to_string(path)};
      for (double v : row) cells.push_back(format_double(v));
      csv.row(cells);
    }
  }
  {
    Csv csv = open("reports.csv", {"statistic", "estimate", "se", "sample_size", "pass"});
    for (const auto& r : bundle.reports)
      csv.row({r.statistic, format_double(r.estimate), format_double(r.se), std::to_string(r.sample_size),
               r.pass ? (*r.pass ? "true" : "false") : "na"});
  }
  {
    Csv csv = open("values.csv", {"statistic", "key", "value"});
    for (const auto& r : bundle.reports)
      for (const auto& [k, v] : r.values) csv.row({r.statistic, k, format_double(v)});
  }
  {
    // Plot data: curves aligned with the n-grid use n as x, the rest use the index.
    Csv csv = open("curves.csv", {"statistic", "curve", "x", "y"});
    for (const auto& r : bundle.reports) {
      for (const auto& [name, ys] : r.curves) {
        if (name == "lambda" || name == "windowed") continue;
        const std::vector<double>* xs = nullptr;
        if (ys.size() == r.n_grid.size()) xs = &r.n_grid;
        if (name == "profile") {
          auto l = r.curves.find("lambda");
          if (l != r.curves.end()) xs = &l->second;
        }
        for (std::size_t i = 0; i < ys.size(); ++i)
          csv.row({r.statistic, name, xs ? format_double((*xs)[i]) : std::to_string(i), format_double(ys[i])});
      }
    }
  }
  if (!bundle.accumulator.sums.empty()) {
    Csv csv = open("sums.csv", {"statistic", "index", "value"});
    for (const auto& [id, v] : bundle.accumulator.sums)
      for (std::size_t i = 0; i < v.size(); ++i) csv.row({id, std::to_string(i), format_double(v[i])});
  }
  for (const auto& [id, est] : bundle.covariances) {
    Csv csv = open("covariance_" + id + ".csv", {"a", "b", "estimate", "exact"});
    const auto& K = est.K.matrix();
    for (Eigen::Index a = 0; a < K.rows(); ++a)
      for (Eigen::Index b = 0; b < K.cols(); ++b)
        csv.row({std::to_string(a), std::to_string(b), format_double(K(a, b)),
                 est.exact ? format_double(est.exact->matrix()(a, b)) : "na"});
  }
  return files;
}

void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const std::vector<std::string>& files) {
  std::filesystem::create_directories(dir);
  Json m;
  m["name"] = config.name;
  m["config_hash"] = hex64(config_hash(config));
  m["model_hash"] = hex64(model_hash(config.model));
  m["seed"] = config.seed;
  m["version"] = kVersion;
  m["files"] = files;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

}  // namespace lilab
