#include "fadl/commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fadl/cost_model.hpp"
#include "fadl/errors.hpp"

namespace fadl {

void DataSource::validate() const {
  if (path.has_value() == synth.has_value()) throw InputError("give exactly one of a dataset path or a synthetic spec");
  if (synth && dimension) throw InputError("a dimension override applies to LIBSVM input only");
}

CostSweepOptions::Dims parse_dims(const std::string& text) {
  CostSweepOptions::Dims d;
  std::string rest = text;
  if (const auto eq = text.find('='); eq != std::string::npos) {
    d.name = text.substr(0, eq);
    rest = text.substr(eq + 1);
  }
  const auto colon = rest.find(':');
  if (colon == std::string::npos) throw InputError("dims must look like name=nz:m, got '" + text + "'");
  try {
    std::size_t used = 0;
    d.nz = std::stod(rest.substr(0, colon), &used);
    if (used != colon) throw InputError("bad nz");
    const std::string ms = rest.substr(colon + 1);
    d.m = std::stod(ms, &used);
    if (used != ms.size()) throw InputError("bad m");
  } catch (const std::logic_error&) {
    throw InputError("dims must look like name=nz:m, got '" + text + "'");
  }
  if (!(d.nz > 0.0) || !(d.m > 0.0)) throw InputError("nz and m must be positive");
  if (d.name.empty()) d.name = rest;
  return d;
}

std::vector<CostSweepOptions::Dims> known_dataset_dims() {
  return {{"kdd2010", 0.31e9, 20.21e6},
          {"url", 0.22e9, 3.23e6},
          {"webspam", 0.98e9, 16.6e6},
          {"mnist8m", 6.35e9, 784},
          {"rcv", 0.50e8, 47236}};
}

Dataset load_dataset(const DataSource& source, std::ostream& err) {
  source.validate();
  if (source.synth) {
    const auto& s = *source.synth;
    return synth_classification(s.n, s.m, s.density, s.separability, s.seed);
  }
  std::vector<std::string> warnings;
  LibsvmOptions opts;
  opts.dimension = source.dimension;
  Dataset data = load_libsvm(*source.path, opts, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return data;
}

namespace {

struct Prepared {
  std::unique_ptr<Dataset> data;
  std::unique_ptr<Objective> objective;
  std::vector<Shard> shards;
};

Prepared prepare(const Experiment& ex, std::ostream& err) {
  Prepared p;
  p.data = std::make_unique<Dataset>(load_dataset(ex.data, err));
  p.objective = std::make_unique<Objective>(*p.data, ex.loss, ex.lambda);
  p.shards = canonical_shards(partition(p.data->n(), ex.run.nodes, ex.run.seed, ex.scheme).shards());
  return p;
}

RunConfig with_reference(const Experiment& ex, const Objective& obj, std::ostream& err) {
  RunConfig cfg = ex.run;
  if (ex.reference && !cfg.f_star) {
    cfg.f_star = reference_optimum(obj);
    err << "reference f* = " << format_double(*cfg.f_star) << "\n";
  }
  return cfg;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const StagnationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitStagnation;
  } catch (const LineSearchError& e) {
    err << "error: " << e.what() << "\n";
    return kExitStagnation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

void write_metrics_to(const std::optional<std::string>& path, const RunMetrics& metrics, std::ostream& out) {
  if (!path) {
    write_metrics(metrics, out);
    return;
  }
  std::ofstream f(*path);
  if (!f) throw InputError("cannot write '" + *path + "'");
  write_metrics(metrics, f);
}

}  // namespace

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    options.experiment.run.validate();
    const Prepared p = prepare(options.experiment, err);
    RunConfig cfg = with_reference(options.experiment, *p.objective, err);
    auto comm = make_channel(options.experiment.backend, *p.objective, p.shards, options.experiment.threads);
    const RunResult res = run(cfg, *comm);
    write_metrics_to(options.metrics_path, res.metrics, out);
    if (options.table_path) {
      std::ofstream f(*options.table_path);
      if (!f) throw InputError("cannot write '" + *options.table_path + "'");
      write_metrics_table(res.metrics, f);
    }
    err << "stopped: " << to_string(res.stop) << " after " << res.metrics.back().r << " outer iterations, "
        << res.ledger.vector_reductions << " communication passes\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_compare(const CompareOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (options.methods.empty()) throw InputError("compare needs at least one method");
    options.experiment.run.validate();
    const Prepared p = prepare(options.experiment, err);
    const RunConfig base = with_reference(options.experiment, *p.objective, err);
    RunMetrics all;
    out << "method\tfamily\tnodes\touter_iters\tcomm_passes\tprobes\tinner_iters\tcost_units\telapsed_seconds\tstop\tf"
           "\trel_gap\n";
    for (const auto& spec : options.methods) {
      RunConfig cfg = base;
      const auto colon = spec.find(':');
      cfg.method = parse_method(spec.substr(0, colon));
      if (colon != std::string::npos) {
        if (cfg.method != Method::FADL) throw InputError("only fadl takes a family: '" + spec + "'");
        cfg.family = parse_family(spec.substr(colon + 1));
      }
      cfg.run_id = spec;
      auto comm = make_channel(options.experiment.backend, *p.objective, p.shards, options.experiment.threads);
      const RunResult res = run(cfg, *comm);
      const auto& last = res.metrics.back();
      out << last.method << '\t' << last.family << '\t' << last.nodes << '\t' << last.r << '\t' << last.comm_passes
          << '\t' << last.probes << '\t' << last.inner_iters << '\t' << format_double(last.cost_units) << '\t'
          << format_double(last.elapsed_seconds) << '\t' << to_string(res.stop) << '\t' << format_double(last.f)
          << '\t' << (last.rel_gap ? format_double(*last.rel_gap) : "-") << '\n';
      all.insert(all.end(), res.metrics.begin(), res.metrics.end());
    }
    if (options.metrics_path) {
      std::ofstream f(*options.metrics_path);
      if (!f) throw InputError("cannot write '" + *options.metrics_path + "'");
      write_metrics(all, f);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_cost_sweep(const CostSweepOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.gamma.empty() || o.nodes.empty() || o.khat.empty() || o.dims.empty())
      throw InputError("cost-sweep needs non-empty gamma, nodes, khat and dims ranges");
    if (!(o.outer_ratio > 0.0)) throw InputError("outer ratio must be positive");
    out << "name\tgamma\tnodes\tkhat\tnz\tm\tnz_over_m\tthreshold\tpredicate\tfadl_cost\tsqm_cost\tfull_winner\n";
    for (const auto& d : o.dims)
      for (double gamma : o.gamma)
        for (double P : o.nodes)
          for (double khat : o.khat) {
            const bool pred = fadl_faster_predicate(d.nz, d.m, gamma, P, khat);
            const double fadl = total_cost(fadl_profile(d.nz, d.m, P, gamma, khat, 1.0));
            const double sqm = total_cost(sqm_profile(d.nz, d.m, P, gamma, o.outer_ratio));
            out << d.name << '\t' << format_double(gamma) << '\t' << format_double(P) << '\t' << format_double(khat)
                << '\t' << format_double(d.nz) << '\t' << format_double(d.m) << '\t' << format_double(d.nz / d.m)
                << '\t' << format_double(gamma * P / (2.0 * khat)) << '\t' << (pred ? "fadl" : "sqm") << '\t'
                << format_double(fadl) << '\t' << format_double(sqm) << '\t' << (fadl < sqm ? "fadl" : "sqm") << '\n';
          }
    return static_cast<int>(kExitOk);
  });
}

int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto results = run_verify(options, &err);
    bool all = true;
    for (const auto& r : results) {
      out << (r.passed ? "PASS" : "FAIL") << '\t' << r.name << '\t' << r.detail << '\n';
      all = all && r.passed;
    }
    return static_cast<int>(all ? kExitOk : kExitCheckFailed);
  });
}

}  // namespace fadl
