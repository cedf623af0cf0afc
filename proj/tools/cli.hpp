// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command implementations for the mshift executable. Kept in a header so the
// test suite can drive them in-process and inspect exit codes and output.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <mshift.hpp>
#include <mshift/io/csv.hpp>
#include <mshift/io/matrix_market.hpp>

namespace mshift::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, failure = 1, parse_error = 2, dimension_error = 3, eigen_error = 4 };

/// Knobs shared by the subcommands.
struct RunConfig {
  index block_size = 64;
  index nb = 64;
  index batch = 16;
  index workers_panel = 1;
  index workers_update = 1;
  Strategy strategy = Strategy::sequential;
  std::uint64_t seed = 1;
  index maxiter = 30;
  double tol = 1e-6;
  bool fixed_iters = false;

  void validate() const {
    require_dims(block_size >= 1 && nb >= 1 && batch >= 1, "config: block size, nb and batch must be positive");
    require_dims(workers_panel >= 1 && workers_update >= 1, "config: worker counts must be positive");
    require_dims(maxiter >= 1 && tol > 0.0, "config: maxiter and tol must be positive");
  }
};

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError(p.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << v;
  return ss.str();
}

/// Sum of |Ahat(i, j)| over the band i <= j + m.
inline double band_checksum(const RealMatrix& a, index m) {
  double s = 0.0;
  for (index j = 0; j < a.cols(); ++j)
    for (index i = 0; i <= std::min(a.rows() - 1, j + m); ++i) s += std::abs(a(i, j));
  return s;
}

inline const std::array<const char*, 3> archive_files{"Ahat.mtx", "Bhat.mtx", "Chat.mtx"};

inline std::string archive_hash(const fs::path& dir) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* name : archive_files) h = fnv1a(read_file(dir / name), h);
  return "fnv1a64:" + hex64(h);
}

inline SystemBundle load_system(const std::string& a, const std::string& b, const std::string& c) {
  SystemBundle s;
  const fs::path pa = fs::absolute(a);
  s.name = pa.has_parent_path() && !pa.parent_path().filename().empty() ? pa.parent_path().filename().string()
                                                                          : pa.stem().string();
  s.A = io::read_matrix_market_file(a);
  s.B = io::read_matrix_market_file(b);
  s.C = io::read_matrix_market_file(c);
  s.validate();
  return s;
}

inline void write_archive(const fs::path& dir, const ControllerHessForm& f, const std::string& name,
                          const RunConfig& cfg) {
  fs::create_directories(dir);
  io::write_matrix_market_file((dir / archive_files[0]).string(), f.Ahat);
  io::write_matrix_market_file((dir / archive_files[1]).string(), f.Bhat);
  io::write_matrix_market_file((dir / archive_files[2]).string(), f.Chat);
  nlohmann::json j;
  j["format"] = "mshift-controller-hessenberg";
  j["version"] = 1;
  j["name"] = name;
  j["n"] = f.n();
  j["m"] = f.m;
  j["p"] = f.p();
  j["block_size"] = cfg.block_size;
  j["strategy"] = std::string(to_string(cfg.strategy));
  j["band_checksum"] = band_checksum(f.Ahat, f.m);
  j["content_hash"] = archive_hash(dir);
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << '\n';
  if (!out) throw ParseError((dir / "manifest.json").string() + ": write failed");
}

/// Reads an archive written by `reduce`; the manifest, when present, must match the files.
inline ControllerHessForm load_archive(const fs::path& dir) {
  ControllerHessForm f;
  f.Ahat = io::read_matrix_market_file((dir / archive_files[0]).string());
  f.Bhat = io::read_matrix_market_file((dir / archive_files[1]).string());
  f.Chat = io::read_matrix_market_file((dir / archive_files[2]).string());
  f.m = f.Bhat.cols();
  require_dims(f.Ahat.rows() == f.Ahat.cols() && f.Bhat.rows() == f.n() && f.Chat.cols() == f.n(),
               "archive: inconsistent matrix shapes");
  require_dims(f.m >= 1 && f.m <= f.n() && f.p() >= 1, "archive: need 1 <= m <= n and p >= 1");
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(manifest));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(manifest.string() + ": " + e.what());
    }
    if (j.value("content_hash", std::string{}) != archive_hash(dir))
      throw ParseError(manifest.string() + ": content hash does not match the archive files");
    if (j.value("m", index{-1}) != f.m) throw ParseError(manifest.string() + ": m does not match Bhat");
  }
  if (!has_controller_hessenberg_pattern(f)) throw ParseError(dir.string() + ": not in controller-Hessenberg form");
  return f;
}

/// One shift per line as "re", "re im" or "re,im"; '#' starts a comment.
inline std::vector<cplx> read_shift_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::vector<cplx> out;
  std::string line;
  index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::string re_tok, im_tok, extra;
    if (!(ls >> re_tok)) continue;
    ls >> im_tok >> extra;
    const std::string where = path + ":" + std::to_string(lineno);
    if (!extra.empty()) throw ParseError(where + ": expected at most two numbers");
    const double re = io::detail::parse_double(re_tok, where);
    const double im = im_tok.empty() ? 0.0 : io::detail::parse_double(im_tok, where);
    out.emplace_back(re, im);
  }
  return out;
}

inline std::vector<double> logspace(double lo, double hi, index count) {
  require_dims(count >= 0, "logspace: count must be nonnegative");
  if (count > 0 && (lo <= 0.0 || hi <= 0.0)) throw ParseError("logspace: bounds must be positive");
  std::vector<double> out;
  for (index k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    out.push_back(std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo))));
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, index count) {
  std::vector<double> out;
  for (index k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    out.push_back(lo + t * (hi - lo));
  }
  return out;
}

/// Owns the worker pools and counters behind one command.
struct Context {
  explicit Context(const RunConfig& c)
      : cfg(c),
        panel_pool(static_cast<std::size_t>(c.workers_panel)),
        update_pool(static_cast<std::size_t>(c.workers_update)) {}

  ReductionOptions reduction() {
    ReductionOptions o;
    o.block_size = cfg.block_size;
    o.strategy = cfg.strategy;
    o.panel_pool = &panel_pool;
    o.update_pool = &update_pool;
    o.counters = &counters;
    return o;
  }
  SolverConfig solver() {
    SolverConfig s;
    s.nb = cfg.nb;
    s.batch = cfg.batch;
    s.pool = &update_pool;
    s.counters = &counters;
    s.schedules = &schedules;
    return s;
  }

  RunConfig cfg;
  WorkerPool panel_pool;
  WorkerPool update_pool;
  PhaseCounters counters;
  ScheduleCache schedules;
};

inline void write_tf_csv(std::ostream& out, const TransferFunctionResult& tf, index p, index m) {
  std::vector<std::string> head{"re_sigma", "im_sigma"};
  for (index i = 0; i < p; ++i)
    for (index j = 0; j < m; ++j) {
      const std::string tag = "g_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
      head.push_back("re_" + tag);
      head.push_back("im_" + tag);
    }
  head.emplace_back("status");
  io::CsvWriter w(out);
  w.header(head);
  for (std::size_t l = 0; l < tf.shifts.size(); ++l) {
    w.field(tf.shifts[l].real()).field(tf.shifts[l].imag());
    const ConstView<cplx> g = tf.slice(static_cast<index>(l), m);
    for (index i = 0; i < p; ++i)
      for (index j = 0; j < m; ++j) w.field(g(i, j).real()).field(g(i, j).imag());
    w.field(tf.status[l].ok() ? "ok" : "singular");
    w.end_row();
  }
}

inline void write_history_csv(std::ostream& out, const IrkaState& st) {
  io::CsvWriter w(out);
  const std::vector<std::string> head{"iter", "shift_index", "re", "im", "shift_change"};
  w.header(head);
  for (std::size_t k = 0; k < st.history.size(); ++k)
    for (std::size_t i = 0; i < st.history[k].size(); ++i) {
      w.field(static_cast<long long>(k + 1)).field(static_cast<long long>(i + 1));
      w.field(st.history[k][i].real()).field(st.history[k][i].imag()).field(st.shift_change[k]);
      w.end_row();
    }
}

/// Writes to the named file, or to `fallback` when the name is empty or "-".
template <typename F>
void with_output(const std::string& path, std::ostream& fallback, F&& body) {
  if (path.empty() || path == "-") {
    body(fallback);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  body(out);
  if (!out) throw ParseError(path + ": write failed");
}

inline void add_common_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--block-size", cfg.block_size, "panel width b of the blocked reduction")->check(CLI::PositiveNumber);
  cmd->add_option("--nb", cfg.nb, "rows eliminated per solver window step")->check(CLI::PositiveNumber);
  cmd->add_option("--batch", cfg.batch, "shifts processed together")->check(CLI::PositiveNumber);
  cmd->add_option("--workers-panel", cfg.workers_panel, "threads for panel-side work")->check(CLI::PositiveNumber);
  cmd->add_option("--workers-update", cfg.workers_update, "threads for updates and batched solves")
      ->check(CLI::PositiveNumber);
  cmd->add_option_function<std::string>(
         "--strategy", [&cfg](const std::string& v) { cfg.strategy = v == "overlapped" ? Strategy::overlapped : Strategy::sequential; },
         "sequential or overlapped")
      ->check(CLI::IsMember({"sequential", "overlapped"}));
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--maxiter", cfg.maxiter, "IRKA iteration limit")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", cfg.tol, "IRKA shift-change tolerance")->check(CLI::PositiveNumber);
  cmd->add_flag("--fixed-iters", cfg.fixed_iters, "run exactly --maxiter IRKA iterations");
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Shifted linear systems in controller-Hessenberg form"};
  app.require_subcommand(1);
  RunConfig cfg;

  // generate
  index gen_n = 64, gen_m = 2, gen_p = 2;
  double gen_margin = 0.1;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "write a seeded random stable system A.mtx, B.mtx, C.mtx");
  gen->add_option("--n", gen_n, "state dimension")->required()->check(CLI::PositiveNumber);
  gen->add_option("--m", gen_m, "inputs")->check(CLI::PositiveNumber);
  gen->add_option("--p", gen_p, "outputs")->check(CLI::PositiveNumber);
  gen->add_option("--margin", gen_margin, "bound on the spectral abscissa is -margin")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "output directory")->required();
  add_common_flags(gen, cfg);

  // reduce
  std::string in_a, in_b, in_c, arch_out;
  auto* red = app.add_subcommand("reduce", "reduce (A, B, C) to controller-Hessenberg form");
  red->add_option("-A,--A", in_a, "A matrix (Matrix Market)")->required();
  red->add_option("-B,--B", in_b, "B matrix (Matrix Market)")->required();
  red->add_option("-C,--C", in_c, "C matrix (Matrix Market)")->required();
  red->add_option("--out", arch_out, "archive directory")->required();
  add_common_flags(red, cfg);

  // tf
  std::string archive, shift_file, csv_out;
  double w_min = 1e-2, w_max = 1e2;
  index w_count = 0;
  auto* tf = app.add_subcommand("tf", "evaluate the transfer function at many shifts");
  tf->add_option("--archive", archive, "archive directory from reduce")->required();
  auto* shifts_opt = tf->add_option("--shifts", shift_file, "shift list file");
  tf->add_option("--w-min", w_min, "smallest frequency of the log-spaced i*w range");
  tf->add_option("--w-max", w_max, "largest frequency");
  auto* count_opt = tf->add_option("--count", w_count, "number of frequencies")->check(CLI::NonNegativeNumber);
  shifts_opt->excludes(count_opt);
  tf->add_option("--out", csv_out, "CSV file (default stdout)");
  add_common_flags(tf, cfg);

  // pspec
  double re_min = -1, re_max = 1, im_min = -1, im_max = 1;
  index re_count = 11, im_count = 11;
  auto* ps = app.add_subcommand("pspec", "||G(z)||_2 over a rectangular grid");
  ps->add_option("--archive", archive, "archive directory from reduce")->required();
  ps->add_option("--re-min", re_min);
  ps->add_option("--re-max", re_max);
  ps->add_option("--re-count", re_count)->check(CLI::NonNegativeNumber);
  ps->add_option("--im-min", im_min);
  ps->add_option("--im-max", im_max);
  ps->add_option("--im-count", im_count)->check(CLI::NonNegativeNumber);
  ps->add_option("--out", csv_out, "CSV file (default stdout)");
  add_common_flags(ps, cfg);

  // irka
  index order = 4;
  std::string model_out, history_out;
  auto* ir = app.add_subcommand("irka", "H2 model reduction by IRKA in reduced coordinates");
  ir->add_option("--archive", archive, "archive directory from reduce")->required();
  ir->add_option("-r,--order", order, "reduced order")->required()->check(CLI::PositiveNumber);
  ir->add_option("--out", model_out, "directory for Ar.mtx, Br.mtx, Cr.mtx and history.csv")->required();
  add_common_flags(ir, cfg);

  // bench
  std::string sys_dir;
  index bench_shifts = 16;
  std::vector<index> bench_b, bench_nb, bench_s;
  auto* be = app.add_subcommand("bench", "per-phase flop and time counters");
  be->add_option("--system", sys_dir, "directory with A.mtx, B.mtx, C.mtx (default: random system)");
  be->add_option("--n", gen_n, "random system order")->check(CLI::PositiveNumber);
  be->add_option("--m", gen_m, "random system inputs")->check(CLI::PositiveNumber);
  be->add_option("--p", gen_p, "random system outputs")->check(CLI::PositiveNumber);
  be->add_option("--shifts", bench_shifts, "number of i*w shifts")->check(CLI::NonNegativeNumber);
  be->add_option("--block-sizes", bench_b, "list of b values")->delimiter(',');
  be->add_option("--nbs", bench_nb, "list of nb values")->delimiter(',');
  be->add_option("--batches", bench_s, "list of batch sizes")->delimiter(',');
  be->add_option("--out", csv_out, "CSV file (default stdout)");
  add_common_flags(be, cfg);

  // schedule
  index sch_rows = 8, sch_cols = 14;
  bool sch_dump = false;
  auto* sc = app.add_subcommand("schedule", "greedy annihilation schedule for a trapezoidal block");
  sc->add_option("--rows", sch_rows, "block rows")->required()->check(CLI::PositiveNumber);
  sc->add_option("--cols", sch_cols, "block columns")->required()->check(CLI::PositiveNumber);
  sc->add_flag("--dump", sch_dump, "print the step grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::parse_error;
  }

  try {
    cfg.validate();
    if (*gen) {
      const SystemBundle s = random_stable_system(gen_n, gen_m, gen_p, cfg.seed, gen_margin);
      fs::create_directories(gen_out);
      io::write_matrix_market_file((fs::path(gen_out) / "A.mtx").string(), s.A);
      io::write_matrix_market_file((fs::path(gen_out) / "B.mtx").string(), s.B);
      io::write_matrix_market_file((fs::path(gen_out) / "C.mtx").string(), s.C);
      out << s.name << '\n';
    } else if (*red) {
      const SystemBundle s = load_system(in_a, in_b, in_c);
      require_dims(s.m() < s.n(), "reduce: need m < n");
      Context ctx(cfg);
      const ControllerHessForm f = reduce_controller_hessenberg(s.A, s.B, s.C, ctx.reduction());
      write_archive(arch_out, f, s.name, cfg);
      out << "n=" << f.n() << " m=" << f.m << " p=" << f.p() << " archive=" << arch_out << '\n';
    } else if (*tf) {
      const ControllerHessForm f = load_archive(archive);
      std::vector<cplx> shifts;
      if (!shift_file.empty()) {
        shifts = read_shift_list(shift_file);
      } else {
        for (double w : logspace(w_min, w_max, w_count)) shifts.emplace_back(0.0, w);
      }
      Context ctx(cfg);
      const TransferFunctionResult res = eval_transfer_function(f, shifts, ctx.solver());
      with_output(csv_out, out, [&](std::ostream& o) { write_tf_csv(o, res, f.p(), f.m); });
    } else if (*ps) {
      const ControllerHessForm f = load_archive(archive);
      std::vector<cplx> grid;
      for (double im : linspace(im_min, im_max, im_count))
        for (double re : linspace(re_min, re_max, re_count)) grid.emplace_back(re, im);
      Context ctx(cfg);
      const std::vector<double> norms = structured_pseudospectrum_grid(f, grid, ctx.solver());
      with_output(csv_out, out, [&](std::ostream& o) {
        io::CsvWriter w(o);
        const std::vector<std::string> head{"re", "im", "norm", "status"};
        w.header(head);
        for (std::size_t k = 0; k < grid.size(); ++k) {
          const bool singular = std::isinf(norms[k]);
          w.field(grid[k].real()).field(grid[k].imag());
          if (singular) {
            w.field("inf");
          } else {
            w.field(norms[k]);
          }
          w.field(singular ? "singular" : "ok");
          w.end_row();
        }
      });
    } else if (*ir) {
      const ControllerHessForm f = load_archive(archive);
      require_dims(order < f.n(), "irka: need r < n");
      Context ctx(cfg);
      IrkaOptions opt;
      opt.maxiter = cfg.maxiter;
      opt.tol = cfg.tol;
      opt.fixed_iterations = cfg.fixed_iters;
      opt.solver = ctx.solver();
      const IrkaResult res = irka_iterate(f, order, opt);
      const fs::path dir(model_out);
      fs::create_directories(dir);
      io::write_matrix_market_file((dir / "Ar.mtx").string(), res.model.Ar);
      io::write_matrix_market_file((dir / "Br.mtx").string(), res.model.Br);
      io::write_matrix_market_file((dir / "Cr.mtx").string(), res.model.Cr);
      with_output((dir / "history.csv").string(), out, [&](std::ostream& o) { write_history_csv(o, res.state); });
      out << "iterations=" << res.state.iteration << " converged=" << (res.state.converged ? "yes" : "no")
          << " perturbations=" << res.state.perturbations.size() << '\n';
    } else if (*be) {
      const SystemBundle s = sys_dir.empty()
                                 ? random_stable_system(gen_n, gen_m, gen_p, cfg.seed)
                                 : load_system((fs::path(sys_dir) / "A.mtx").string(),
                                               (fs::path(sys_dir) / "B.mtx").string(),
                                               (fs::path(sys_dir) / "C.mtx").string());
      require_dims(s.m() < s.n(), "bench: need m < n");
      if (bench_b.empty()) bench_b.push_back(cfg.block_size);
      if (bench_nb.empty()) bench_nb.push_back(cfg.nb);
      if (bench_s.empty()) bench_s.push_back(cfg.batch);
      std::vector<cplx> shifts;
      for (double w : logspace(1e-2, 1e2, bench_shifts)) shifts.emplace_back(0.0, w);
      with_output(csv_out, out, [&](std::ostream& o) {
        io::CsvWriter w(o);
        const std::vector<std::string> head{"n",   "m",     "p",     "block_size", "nb",     "batch",
                                            "strategy", "phase", "flops", "seconds",    "percent"};
        w.header(head);
        for (index b : bench_b)
          for (index nb : bench_nb)
            for (index batch : bench_s) {
              RunConfig c = cfg;
              c.block_size = b;
              c.nb = nb;
              c.batch = batch;
              c.validate();
              Context ctx(c);
              const ControllerHessForm f = reduce_controller_hessenberg(s.A, s.B, s.C, ctx.reduction());
              (void)eval_transfer_function(f, shifts, ctx.solver());
              double total = 0.0;
              for (std::size_t k = 0; k < phase_names.size(); ++k) total += ctx.counters.seconds(static_cast<Phase>(k));
              for (std::size_t k = 0; k < phase_names.size(); ++k) {
                const auto ph = static_cast<Phase>(k);
                w.field(static_cast<long long>(s.n())).field(static_cast<long long>(s.m()));
                w.field(static_cast<long long>(s.p())).field(static_cast<long long>(b));
                w.field(static_cast<long long>(nb)).field(static_cast<long long>(batch));
                w.field(to_string(c.strategy)).field(phase_names[k]);
                w.field(static_cast<long long>(ctx.counters.flops[k].value())).field(ctx.counters.seconds(ph));
                w.field(total > 0.0 ? 100.0 * ctx.counters.seconds(ph) / total : 0.0);
                w.end_row();
              }
            }
      });
    } else if (*sc) {
      require_dims(sch_rows <= sch_cols, "schedule: need rows <= cols");
      const AnnihilationSchedule s = greedy_schedule(sch_rows, sch_cols);
      out << "rows=" << sch_rows << " cols=" << sch_cols << " steps=" << s.num_steps() << " rotations=" << s.num_rots()
          << '\n';
      if (sch_dump) out << dump_schedule(s);
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::parse_error;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::dimension_error;
  } catch (const EigenError& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::eigen_error;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::parse_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::failure;
  }
  return ExitCode::ok;
}

}  // namespace mshift::cli
