#include "fadl/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fadl/errors.hpp"
#include "fadl/rng.hpp"

namespace fadl {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

bool parse_number(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

bool parse_index(std::string_view tok, std::uint64_t& out) {
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& options, std::vector<std::string>* warnings) {
  std::vector<SparseVector> examples;
  std::vector<double> labels;
  std::size_t max_dim = 0;
  bool zero_label_seen = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;

    double label = 0.0;
    if (!parse_number(tokens[0], label)) throw ParseError("bad label '" + std::string(tokens[0]) + "'", line_no);
    if (label == 0.0) {
      if (!zero_label_seen && warnings)
        warnings->push_back("line " + std::to_string(line_no) + ": label 0 read as -1");
      zero_label_seen = true;
      label = -1.0;
    } else if (label != 1.0 && label != -1.0) {
      throw ParseError("label must be +1, -1 or 0, got '" + std::string(tokens[0]) + "'", line_no);
    }

    std::vector<SparseEntry> entries;
    std::uint64_t prev = 0;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto tok = tokens[k];
      const auto colon = tok.find(':');
      std::uint64_t idx = 0;
      double val = 0.0;
      if (colon == std::string_view::npos || !parse_index(tok.substr(0, colon), idx) ||
          !parse_number(tok.substr(colon + 1), val))
        throw ParseError("bad feature '" + std::string(tok) + "'", line_no);
      if (idx == 0) throw ParseError("feature indices are 1-based", line_no);
      if (idx <= prev) throw ParseError("feature indices must be strictly increasing", line_no);
      if (idx > UINT32_MAX) throw ParseError("feature index too large", line_no);
      if (!std::isfinite(val)) throw ParseError("non-finite feature value", line_no);
      prev = idx;
      if (val != 0.0) entries.push_back({static_cast<std::uint32_t>(idx - 1), val});
    }
    max_dim = std::max<std::size_t>(max_dim, prev);
    examples.emplace_back(std::move(entries));
    labels.push_back(label);
  }
  if (examples.empty()) throw ParseError("no examples in input", std::max<std::size_t>(line_no, 1));
  std::size_t m = max_dim;
  if (options.dimension) {
    if (*options.dimension < max_dim)
      throw InputError("dimension " + std::to_string(*options.dimension) + " is below the largest feature index " +
                       std::to_string(max_dim));
    m = *options.dimension;
  }
  return Dataset(std::move(examples), std::move(labels), m);
}

Dataset load_libsvm(const std::string& path, const LibsvmOptions& options, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_libsvm(in, options, warnings);
}

void write_libsvm(const Dataset& data, std::ostream& out) {
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << (data.y(i) > 0 ? "+1" : "-1");
    for (const auto& e : data.x(i).entries()) out << ' ' << (e.index + 1) << ':' << format_double(e.value);
    out << '\n';
  }
}

std::string_view to_string(PartitionScheme scheme) {
  return scheme == PartitionScheme::RoundRobin ? "round-robin" : "shuffled";
}

PartitionScheme parse_partition_scheme(std::string_view name) {
  if (name == "round-robin") return PartitionScheme::RoundRobin;
  if (name == "shuffled") return PartitionScheme::ShuffledRoundRobin;
  throw InputError("unknown partition scheme '" + std::string(name) + "'");
}

std::vector<Shard> PartitionPlan::shards() const {
  std::vector<Shard> out(nodes);
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

PartitionPlan partition(std::size_t n, std::size_t nodes, std::uint64_t seed, PartitionScheme scheme) {
  if (nodes < 1) throw InputError("node count must be at least 1");
  if (nodes > n) throw InputError("more nodes (" + std::to_string(nodes) + ") than examples (" + std::to_string(n) + ")");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (scheme == PartitionScheme::ShuffledRoundRobin) {
    Rng rng(mix_seed(seed, 0x9a27));
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
  }
  PartitionPlan plan;
  plan.nodes = nodes;
  plan.seed = seed;
  plan.scheme = scheme;
  plan.assignment.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) plan.assignment[order[k]] = k % nodes;
  return plan;
}

Vec synth_planted_weights(std::size_t m, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x77));
  Vec w(m);
  for (auto& v : w) v = rng.normal();
  return w;
}

Dataset synth_classification(std::size_t n, std::size_t m, double density, double separability, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0)) throw InputError("density must lie in (0, 1]");
  if (!(separability >= 0.0 && separability <= 1.0)) throw InputError("separability must lie in [0, 1]");
  if (n == 0 || m == 0) throw InputError("synthetic data needs n >= 1 and m >= 1");
  const Vec planted = synth_planted_weights(m, seed);
  Rng rng(mix_seed(seed, 0x51));
  const double log_skip = density < 1.0 ? std::log1p(-density) : 0.0;
  auto nonzero_normal = [&rng] {
    double v;
    do {
      v = rng.normal();
    } while (v == 0.0);
    return v;
  };
  std::vector<SparseVector> examples;
  std::vector<double> labels;
  examples.reserve(n);
  labels.reserve(n);
  while (examples.size() < n) {
    std::vector<SparseEntry> entries;
    if (density >= 1.0) {
      for (std::size_t j = 0; j < m; ++j) entries.push_back({static_cast<std::uint32_t>(j), nonzero_normal()});
    } else {
      // Gaps between present features are geometric.
      double j = -1.0;
      for (;;) {
        double u;
        do {
          u = rng.uniform();
        } while (u <= 0.0);
        j += 1.0 + std::floor(std::log(u) / log_skip);
        if (j >= static_cast<double>(m)) break;
        entries.push_back({static_cast<std::uint32_t>(j), nonzero_normal()});
      }
      if (entries.empty()) entries.push_back({static_cast<std::uint32_t>(rng.below(m)), nonzero_normal()});
    }
    SparseVector x(std::move(entries));
    const double margin = x.dot(planted);
    if (margin == 0.0) continue;
    double y = margin > 0.0 ? 1.0 : -1.0;
    if (rng.uniform() >= separability) y = -y;
    examples.push_back(std::move(x));
    labels.push_back(y);
  }
  return Dataset(std::move(examples), std::move(labels), m);
}

namespace {

using nlohmann::json;

json to_json(const MetricsRecord& r) {
  return json{{"run_id", r.run_id},
              {"method", r.method},
              {"family", r.family},
              {"nodes", r.nodes},
              {"r", r.r},
              {"f", r.f},
              {"grad_norm", r.grad_norm},
              {"rel_gap", r.rel_gap ? json(*r.rel_gap) : json(nullptr)},
              {"comm_passes", r.comm_passes},
              {"probes", r.probes},
              {"inner_iters", r.inner_iters},
              {"elapsed_seconds", r.elapsed_seconds},
              {"cost_units", r.cost_units},
              {"step", r.step},
              {"cos_angle", r.cos_angle}};
}

MetricsRecord from_json(const json& j) {
  MetricsRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.family = j.at("family").get<std::string>();
  r.nodes = j.at("nodes").get<std::uint64_t>();
  r.r = j.at("r").get<std::uint64_t>();
  r.f = j.at("f").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  if (!j.at("rel_gap").is_null()) r.rel_gap = j.at("rel_gap").get<double>();
  r.comm_passes = j.at("comm_passes").get<std::uint64_t>();
  r.probes = j.at("probes").get<std::uint64_t>();
  r.inner_iters = j.at("inner_iters").get<std::uint64_t>();
  r.elapsed_seconds = j.at("elapsed_seconds").get<double>();
  r.cost_units = j.at("cost_units").get<double>();
  r.step = j.at("step").get<double>();
  r.cos_angle = j.at("cos_angle").get<double>();
  return r;
}

constexpr const char* kColumns[] = {"run_id",      "method",      "family", "nodes",     "r",
                                    "f",           "grad_norm",   "rel_gap", "comm_passes", "probes",
                                    "inner_iters", "elapsed_seconds", "cost_units", "step", "cos_angle"};

}  // namespace

void write_metrics(const RunMetrics& records, std::ostream& out) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

RunMetrics read_metrics(std::istream& in) {
  RunMetrics out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad metrics record: ") + e.what(), line_no);
    }
  }
  return out;
}

void write_metrics_table(const RunMetrics& records, std::ostream& out) {
  bool first = true;
  for (const char* c : kColumns) {
    out << (first ? "" : "\t") << c;
    first = false;
  }
  out << '\n';
  for (const auto& r : records) {
    out << r.run_id << '\t' << r.method << '\t' << r.family << '\t' << r.nodes << '\t' << r.r << '\t'
        << format_double(r.f) << '\t' << format_double(r.grad_norm) << '\t'
        << (r.rel_gap ? format_double(*r.rel_gap) : "-") << '\t' << r.comm_passes << '\t' << r.probes << '\t'
        << r.inner_iters << '\t' << format_double(r.elapsed_seconds) << '\t' << format_double(r.cost_units) << '\t'
        << format_double(r.step) << '\t' << format_double(r.cos_angle) << '\n';
  }
}

RunMetrics read_metrics_table(std::istream& in) {
  RunMetrics out;
  std::string line;
  std::size_t line_no = 0;
  constexpr std::size_t kCount = std::size(kColumns);
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    if (line_no == 1) {
      bool ok = cells.size() == kCount;
      for (std::size_t k = 0; ok && k < kCount; ++k) ok = cells[k] == kColumns[k];
      if (!ok) throw ParseError("unexpected metrics table header", line_no);
      continue;
    }
    if (line.empty()) continue;
    if (cells.size() != kCount) throw ParseError("expected " + std::to_string(kCount) + " columns", line_no);
    auto num = [&](std::size_t k) {
      double v = 0.0;
      if (!parse_number(cells[k], v)) throw ParseError("bad number in column " + std::string(kColumns[k]), line_no);
      return v;
    };
    auto count = [&](std::size_t k) {
      std::uint64_t v = 0;
      if (!parse_index(cells[k], v)) throw ParseError("bad count in column " + std::string(kColumns[k]), line_no);
      return v;
    };
    MetricsRecord r;
    r.run_id = cells[0];
    r.method = cells[1];
    r.family = cells[2];
    r.nodes = count(3);
    r.r = count(4);
    r.f = num(5);
    r.grad_norm = num(6);
    if (cells[7] != "-") r.rel_gap = num(7);
    r.comm_passes = count(8);
    r.probes = count(9);
    r.inner_iters = count(10);
    r.elapsed_seconds = num(11);
    r.cost_units = num(12);
    r.step = num(13);
    r.cos_angle = num(14);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fadl
