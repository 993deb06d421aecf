#pragma once

// One subcommand invocation end to end: apply overrides, evaluate, and shape
// the results into tables plus a console summary. Everything is computed
// before anything is written, so a failed run leaves no partial outputs.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pmq/analytic.hpp"
#include "pmq/emit.hpp"
#include "pmq/errors.hpp"
#include "pmq/optimize.hpp"
#include "pmq/scenario.hpp"
#include "pmq/simulator.hpp"
#include "pmq/validate.hpp"

namespace pmq {

struct RunOptions {
  std::vector<std::string> overrides;           // key=value, applied in order
  std::string out_dir = "out";
  bool json = false;                            // also write data.json
  bool quiet = false;
  std::optional<std::uint64_t> seed;            // wins over scenario [sim] seed
  std::optional<std::uint32_t> replications;
  std::string trace_path;                       // simulate only; empty = off
};

struct RunArtifacts {
  std::string name;      // output directory leaf
  Table data;
  std::string summary;
  std::string resolved;  // effective scenario echo
  std::string trace;     // CSV event trace, empty unless requested
};

namespace detail {

inline Cell num_or_null(double v) {
  return std::isfinite(v) ? Cell::number(v) : Cell::null();
}

inline Cell threshold_cell(const IdleThreshold& t) {
  return t.is_never() ? Cell::str("never") : Cell::number(t.seconds());
}

inline const std::vector<std::string>& analyze_columns() {
  static const std::vector<std::string> c{"response", "power", "off_fraction"};
  return c;
}

inline std::vector<Cell> analyze_cells(const SimConfig& cfg) {
  const Metrics m = analytic_metrics(cfg);
  Workload per = cfg.workload;
  if (cfg.farm) per.arrival_rate /= cfg.farm->servers;
  const double off = off_fraction(cfg.server, per, cfg.policy);
  return {Cell::number(m.response), Cell::number(m.power), Cell::number(off)};
}

inline const std::vector<std::string>& simulate_columns() {
  static const std::vector<std::string> c{
      "response_mean", "response_ci",       "power_mean",
      "power_ci",      "off_fraction",      "mean_jobs",
      "gross_utilization", "net_utilization", "completions", "replications"};
  return c;
}

inline std::vector<Cell> simulate_cells(const SimResult& r) {
  return {Cell::number(r.response_mean),
          Cell::number(r.response_ci),
          Cell::number(r.power_mean),
          Cell::number(r.power_ci),
          Cell::number(r.off_fraction),
          Cell::number(r.mean_jobs),
          Cell::number(r.gross_utilization),
          Cell::number(r.net_utilization),
          Cell::integer(static_cast<long long>(r.completions)),
          Cell::integer(r.replications)};
}

inline const std::vector<std::string>& validate_columns() {
  static const std::vector<std::string> c{
      "analytic_response", "sim_response", "response_ci", "response_rel_err",
      "response_within_ci", "analytic_power", "sim_power", "power_ci",
      "power_rel_err", "power_within_ci"};
  return c;
}

inline std::vector<Cell> validate_cells(const ValidationReport& rep) {
  return {Cell::number(rep.analytic.response),
          Cell::number(rep.sim.response_mean),
          Cell::number(rep.sim.response_ci),
          Cell::number(rep.response_rel_err),
          Cell::boolean(rep.response_within_ci),
          Cell::number(rep.analytic.power),
          Cell::number(rep.sim.power_mean),
          Cell::number(rep.sim.power_ci),
          Cell::number(rep.power_rel_err),
          Cell::boolean(rep.power_within_ci)};
}

inline std::vector<std::string> frontier_columns(DecisionSpace space) {
  switch (space) {
    case DecisionSpace::threshold_pair:
      return {"frequency", "idle_threshold", "response", "power", "status"};
    case DecisionSpace::batch_triple:
      return {"frequency", "batch_delay", "idle_threshold", "response", "power",
              "status"};
    case DecisionSpace::farm_pair:
      return {"servers", "frequency", "response", "power", "status"};
  }
  return {};
}

inline std::vector<Cell> frontier_cells(DecisionSpace space, const OptCandidate& c,
                                        const char* status) {
  std::vector<Cell> row;
  switch (space) {
    case DecisionSpace::threshold_pair:
      row = {num_or_null(c.frequency), threshold_cell(c.idle_threshold),
             num_or_null(c.response), num_or_null(c.power)};
      break;
    case DecisionSpace::batch_triple:
      row = {num_or_null(c.frequency), Cell::number(c.batch_delay),
             threshold_cell(c.idle_threshold), num_or_null(c.response),
             num_or_null(c.power)};
      break;
    case DecisionSpace::farm_pair:
      row = {Cell::integer(c.servers), num_or_null(c.frequency),
             num_or_null(c.response), num_or_null(c.power)};
      break;
  }
  row.push_back(Cell::str(status));
  return row;
}

inline std::string kv_line(const std::string& key, const Cell& cell) {
  return key + ": " + cell.csv_text() + "\n";
}

inline std::string table_summary(const std::string& name, RunKind kind,
                                 const Table& t) {
  std::string s = "scenario: " + name + "\nkind: " + to_string(kind) + "\n";
  if (t.rows.size() == 1) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      s += kv_line(t.columns[i], t.rows[0][i]);
  } else {
    s += "rows: " + std::to_string(t.rows.size()) + "\n";
  }
  return s;
}

}  // namespace detail

inline RunArtifacts run_scenario(RunKind kind, Scenario sc, const RunOptions& opt) {
  for (const auto& ov : opt.overrides) apply_override(sc, ov);
  if (opt.seed) sc.values["sim.seed"] = std::to_string(*opt.seed);
  if (opt.replications) sc.values["sim.replications"] = std::to_string(*opt.replications);

  RunArtifacts art;
  art.name = sc.name;
  art.resolved = resolved_text(sc);

  switch (kind) {
    case RunKind::analyze: {
      art.data.columns = detail::analyze_columns();
      art.data.rows.push_back(detail::analyze_cells(build_sim_config(sc)));
      art.summary = detail::table_summary(sc.name, kind, art.data);
      break;
    }
    case RunKind::simulate: {
      SimConfig cfg = build_sim_config(sc);
      cfg.validate();
      TraceSink sink;
      std::string trace = "time,server,event,queue_len,mode\n";
      if (!opt.trace_path.empty()) {
        sink = [&trace](const TraceRecord& rec) {
          trace += format_double(rec.time);
          trace += ',';
          trace += std::to_string(rec.server);
          trace += ',';
          trace += rec.event;
          trace += ',';
          trace += std::to_string(rec.queue_len);
          trace += ',';
          trace += rec.mode;
          trace += '\n';
        };
      }
      const SimResult r = simulate(cfg, sink ? &sink : nullptr);
      art.data.columns = detail::simulate_columns();
      art.data.rows.push_back(detail::simulate_cells(r));
      if (!opt.trace_path.empty()) art.trace = std::move(trace);
      art.summary = detail::table_summary(sc.name, kind, art.data);
      break;
    }
    case RunKind::validate: {
      SimConfig cfg = build_sim_config(sc);
      const ValidationReport rep = validate_model(cfg);
      art.data.columns = detail::validate_columns();
      art.data.rows.push_back(detail::validate_cells(rep));
      art.summary = detail::table_summary(sc.name, kind, art.data);
      break;
    }
    case RunKind::optimize: {
      const OptProblem p = build_opt_problem(sc);
      const OptResult r = optimize(p);
      art.data.columns = detail::frontier_columns(p.space);
      for (const auto& c : r.frontier)
        art.data.rows.push_back(detail::frontier_cells(p.space, c, c.status));
      art.data.rows.push_back(detail::frontier_cells(p.space, r.best, "selected"));
      art.summary = "scenario: " + sc.name + "\nkind: optimize\n";
      art.summary += detail::kv_line("frequency", detail::num_or_null(r.best.frequency));
      if (p.space != DecisionSpace::farm_pair)
        art.summary +=
            detail::kv_line("idle_threshold", detail::threshold_cell(r.best.idle_threshold));
      if (p.space == DecisionSpace::batch_triple)
        art.summary += detail::kv_line("batch_delay", Cell::number(r.best.batch_delay));
      if (p.space == DecisionSpace::farm_pair)
        art.summary += detail::kv_line("servers", Cell::integer(r.best.servers));
      art.summary += detail::kv_line("response", detail::num_or_null(r.best.response));
      art.summary += detail::kv_line("power", detail::num_or_null(r.best.power));
      break;
    }
    case RunKind::sweep: {
      if (sc.axes.empty())
        throw ConfigError("sweep needs at least one [sweep] axis line");
      const std::string base_name = sc.str_or("sweep.base", "analyze");
      const auto base = run_kind_from(base_name);
      if (!base || *base == RunKind::sweep)
        throw ConfigError("sweep.base must be analyze, simulate, optimize or validate, got '" +
                          base_name + "'");

      std::vector<std::string> base_cols;
      switch (*base) {
        case RunKind::analyze: base_cols = detail::analyze_columns(); break;
        case RunKind::simulate: base_cols = detail::simulate_columns(); break;
        case RunKind::validate: base_cols = detail::validate_columns(); break;
        case RunKind::optimize:
          // generic decision columns: every space fills a subset, rest default
          base_cols = {"frequency", "idle_threshold", "batch_delay", "servers",
                       "response", "power"};
          break;
        case RunKind::sweep: break;
      }
      for (const auto& axis : sc.axes) art.data.columns.push_back(axis.key);
      for (const auto& col : base_cols) art.data.columns.push_back(col);
      art.data.columns.push_back("status");

      std::size_t total = 1;
      for (const auto& axis : sc.axes) total *= axis.values.size();
      std::size_t ok_rows = 0;
      std::vector<std::size_t> idx(sc.axes.size(), 0);
      for (std::size_t point = 0; point < total; ++point) {
        // odometer: decode point into one index per axis, first axis slowest
        std::size_t rem = point;
        for (std::size_t a = sc.axes.size(); a-- > 0;) {
          idx[a] = rem % sc.axes[a].values.size();
          rem /= sc.axes[a].values.size();
        }
        Scenario pt = sc;
        std::vector<Cell> row;
        for (std::size_t a = 0; a < sc.axes.size(); ++a) {
          const double v = sc.axes[a].values[idx[a]];
          pt.values[sc.axes[a].key] = format_double(v);
          row.push_back(Cell::number(v));
        }
        try {
          std::vector<Cell> cells;
          switch (*base) {
            case RunKind::analyze:
              cells = detail::analyze_cells(build_sim_config(pt));
              break;
            case RunKind::simulate:
              cells = detail::simulate_cells(simulate(build_sim_config(pt)));
              break;
            case RunKind::validate:
              cells = detail::validate_cells(validate_model(build_sim_config(pt)));
              break;
            case RunKind::optimize: {
              const OptResult r = optimize(build_opt_problem(pt));
              cells = {detail::num_or_null(r.best.frequency),
                       detail::threshold_cell(r.best.idle_threshold),
                       Cell::number(r.best.batch_delay),
                       Cell::integer(r.best.servers),
                       detail::num_or_null(r.best.response),
                       detail::num_or_null(r.best.power)};
              break;
            }
            case RunKind::sweep: break;
          }
          row.insert(row.end(), cells.begin(), cells.end());
          row.push_back(Cell::str("ok"));
          ++ok_rows;
        } catch (const Error& e) {
          for (std::size_t i = 0; i < base_cols.size(); ++i) row.push_back(Cell::null());
          row.push_back(Cell::str(to_string(e.kind())));
        }
        art.data.rows.push_back(std::move(row));
      }
      art.summary = "scenario: " + sc.name + "\nkind: sweep\nbase: " + base_name +
                    "\nrows: " + std::to_string(total) + "\nok: " +
                    std::to_string(ok_rows) + "\n";
      break;
    }
  }
  return art;
}

// <out_dir>/<name>/{data.csv, data.json, summary.txt, scenario.resolved, trace.csv}
inline std::filesystem::path write_artifacts(const RunArtifacts& art,
                                             const RunOptions& opt) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(opt.out_dir) / art.name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
  write_text_file((dir / "data.csv").string(), to_csv(art.data));
  if (opt.json)
    write_text_file((dir / "data.json").string(), to_json_rows(art.data).dump(2) + "\n");
  write_text_file((dir / "summary.txt").string(), art.summary);
  write_text_file((dir / "scenario.resolved").string(), art.resolved);
  if (!art.trace.empty()) write_text_file(opt.trace_path, art.trace);
  return dir;
}

}  // namespace pmq
