#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "symsat/basis.hpp"
#include "symsat/group_expr.hpp"
#include "symsat/io.hpp"
#include "symsat/pair_partition.hpp"
#include "symsat/solver.hpp"
#include "symsat/symfind.hpp"
#include "symsat/tasks.hpp"

namespace symsat {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration

struct TrainConfig {
  std::string model = "plain";  // plain | plain-aux300 | sym | auto
  std::string task = "sudoku9";
  std::string group;  // sym: group expression; empty selects the task default
  int epochs = 25;
  int batch = 40;
  double lr = 0.0;  // 0 resolves to 2e-3 (plain) or 4e-2 (sym)
  int m = 600;      // clause count of the plain model
  int k = 16;       // embedding rank
  int naux = 0;
  std::uint64_t seed = 1;
  int symfind_epoch = 0;  // auto: warm-up length T; 0 resolves per task
  int corruption = 0;
  double validation_threshold = -1.0;  // <0 resolves from the corruption level
  bool entry_level = false;  // validate on entry accuracy instead of boards
  bool skip_validation = false;
  int threads = 1;
  SymFindConfig symfind;
  ForwardOptions forward_opts;
  BackwardOptions backward_opts;
};

inline double resolve_lr(const TrainConfig& cfg, bool sym_model) {
  if (cfg.lr > 0.0) return cfg.lr;
  return sym_model ? 4e-2 : 2e-3;
}

inline int resolve_symfind_epoch(const TrainConfig& cfg) {
  if (cfg.symfind_epoch > 0) return cfg.symfind_epoch;
  return cfg.task == "cube333" ? 20 : 10;
}

inline double resolve_validation_threshold(const TrainConfig& cfg) {
  if (cfg.validation_threshold >= 0.0) return cfg.validation_threshold;
  if (cfg.corruption <= 1) return 0.05;
  if (cfg.corruption == 2) return 0.15;
  return 0.2;
}

inline int resolve_naux(const TrainConfig& cfg) {
  if (cfg.model == "plain-aux300" || cfg.model == "plain-aux") return 300;
  return cfg.naux;
}

inline std::uint64_t child_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return Rng::derive(seed, path).next_u64();
}

// Ground-truth pair partition of a task's variable block.
inline PairPartition task_partition(const std::string& task) {
  if (task == "sudoku9") return basis_from_theorem(sudoku_group());
  if (task == "cube333") return pair_orbits(task_n("cube333"), cube_generators().combined);
  throw std::invalid_argument("unknown task: " + task);
}

inline std::string default_group_label(const std::string& task) {
  if (task == "sudoku9") return format_group_expr(sudoku_group());
  if (task == "cube333") return "builtin:cube333";
  throw std::invalid_argument("unknown task: " + task);
}

// Resolves a group label to the pair partition it denotes. Labels are either
// a group expression over the task variables or "builtin:<task>" for groups
// given by generators rather than an expression. Auxiliary variables extend
// an expression by a trivial direct summand.
inline PairPartition partition_for_label(const std::string& label, const std::string& task, int naux) {
  if (label.rfind("builtin:", 0) == 0) {
    if (label.substr(8) != task)
      throw std::invalid_argument("group label does not match task: " + label);
    if (naux > 0) throw std::invalid_argument("builtin groups do not support auxiliary variables");
    return task_partition(task);
  }
  GroupExpr expr = parse_group_expr(label);
  if (expr.degree() != task_n(task))
    throw std::invalid_argument("group degree does not match task: " + label);
  if (naux > 0) expr = GroupExpr::sum(std::move(expr), GroupExpr::trivial(naux));
  return basis_from_theorem(expr);
}

// ---------------------------------------------------------------------------
// Model

struct Model {
  std::string kind;  // "plain" or "sym"
  std::string task;
  int naux = 0;
  int k = 16;
  PlainParams plain;
  SymParams sym;
  std::string group_label;  // sym only
  std::vector<int> sigma;   // conjugation baked into sym.basis; empty = identity

  bool is_sym() const { return kind == "sym"; }
  int n_task() const { return task_n(task); }
  int n_total() const { return 1 + n_task() + naux; }
};

inline Model init_model(const TrainConfig& cfg, std::uint64_t params_seed) {
  Model model;
  model.task = cfg.task;
  model.naux = resolve_naux(cfg);
  model.k = cfg.k;
  if (cfg.model == "plain" || cfg.model == "plain-aux300" || cfg.model == "plain-aux") {
    model.kind = "plain";
    model.plain = init_plain(model.n_total(), cfg.m, params_seed);
  } else if (cfg.model == "sym") {
    model.kind = "sym";
    model.group_label = cfg.group.empty() ? default_group_label(cfg.task) : cfg.group;
    PairPartition basis = partition_for_label(model.group_label, cfg.task, model.naux);
    model.sym = init_sym(std::move(basis), 1, params_seed);
  } else {
    throw std::invalid_argument("unknown model kind: " + cfg.model);
  }
  return model;
}

inline Matrix full_C(const Model& model) {
  if (model.is_sym()) return assemble_C(model.sym);
  return model.plain.S.transpose() * model.plain.S;
}

inline Matrix task_block_C(const Model& model) {
  const int nt = model.n_task();
  if (model.is_sym()) {
    const Matrix c = assemble_C(model.sym);
    return c.block(1, 1, nt, nt);
  }
  const Matrix st = model.plain.S.middleCols(1, nt);
  return st.transpose() * st;
}

inline Checkpoint checkpoint_of(const Model& model) {
  Checkpoint ckpt;
  ckpt.model = model.kind;
  ckpt.task = model.task;
  ckpt.naux = model.naux;
  ckpt.k = model.k;
  if (model.is_sym()) {
    ckpt.theta = model.sym.theta;
    ckpt.group = model.group_label;
    ckpt.sigma = model.sigma;
    ckpt.offset = model.sym.offset;
  } else {
    ckpt.S = model.plain.S;
  }
  return ckpt;
}

inline Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model model;
  model.kind = ckpt.model;
  model.task = ckpt.task;
  model.naux = ckpt.naux;
  model.k = ckpt.k > 0 ? ckpt.k : 16;
  if (ckpt.model == "plain") {
    if (ckpt.S.cols() != model.n_total())
      throw std::runtime_error("checkpoint width does not match task");
    model.plain.S = ckpt.S;
  } else if (ckpt.model == "sym") {
    PairPartition basis = partition_for_label(ckpt.group, ckpt.task, ckpt.naux);
    if (!ckpt.sigma.empty()) {
      if (static_cast<int>(ckpt.sigma.size()) != basis.n)
        throw std::runtime_error("checkpoint sigma does not match group degree");
      basis = conjugate(basis, Perm(ckpt.sigma));
    }
    if (ckpt.theta.size() != basis.num_cells)
      throw std::runtime_error("checkpoint theta does not match group basis");
    model.sym.basis = std::move(basis);
    model.sym.offset = ckpt.offset;
    model.sym.theta = ckpt.theta;
    model.group_label = ckpt.group;
    model.sigma = ckpt.sigma;
  } else {
    throw std::runtime_error("unknown checkpoint model kind: " + ckpt.model);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Example plumbing. Column 0 is the truth direction, task variables follow,
// auxiliary variables trail as permanent unsupervised outputs.

inline ProblemSplit example_split(const Example& ex, int naux) {
  const int nt = static_cast<int>(ex.assignment.size());
  std::vector<int> outputs;
  for (int v = 0; v < nt; ++v)
    if (!ex.input_mask[static_cast<std::size_t>(v)]) outputs.push_back(1 + v);
  for (int a = 0; a < naux; ++a) outputs.push_back(1 + nt + a);
  return make_split(1 + nt + naux, std::move(outputs), naux);
}

inline std::vector<int> example_targets(const Example& ex, int naux) {
  const int nt = static_cast<int>(ex.assignment.size());
  std::vector<int> targets(static_cast<std::size_t>(1 + nt + naux), 0);
  for (int v = 0; v < nt; ++v)
    targets[static_cast<std::size_t>(1 + v)] = ex.assignment[static_cast<std::size_t>(v)];
  return targets;
}

inline Matrix example_inputs(const Example& ex, const ProblemSplit& split, int k) {
  std::vector<int> bits(static_cast<std::size_t>(split.n), 0);
  const int nt = static_cast<int>(ex.assignment.size());
  for (int v = 0; v < nt; ++v)
    bits[static_cast<std::size_t>(1 + v)] = ex.assignment[static_cast<std::size_t>(v)];
  return embed_inputs(bits, split, k);
}

// ---------------------------------------------------------------------------
// Concurrency helper: contiguous chunks, exceptions rethrown after join.

namespace detail {

template <class Fn>
inline void run_chunked(int total, int threads, Fn&& fn) {
  const int t = std::max(1, std::min(threads, total));
  if (total <= 0) return;
  if (t <= 1) {
    fn(0, total, 0);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(t));
  std::vector<std::thread> pool;
  const int base = total / t, rem = total % t;
  int begin = 0;
  for (int c = 0; c < t; ++c) {
    const int end = begin + base + (c < rem ? 1 : 0);
    pool.emplace_back([&fn, &errors, begin, end, c] {
      try {
        fn(begin, end, c);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluation

struct EvalResult {
  double loss = 0.0;
  double board_acc = 0.0;
  double entry_acc = 0.0;
  int degenerate = 0;
};

namespace detail {

// fwd(v_in, split, seed) -> EmbeddingState
template <class ForwardFn>
inline EvalResult eval_impl(ForwardFn&& fwd, int naux, int k, const std::vector<Example>& set,
                            std::uint64_t seed, int threads) {
  EvalResult out;
  if (set.empty()) return out;
  const int total = static_cast<int>(set.size());
  std::vector<Vector> probs(set.size());
  std::vector<double> losses(set.size(), 0.0);
  std::vector<char> degen(set.size(), 0);
  run_chunked(total, threads, [&](int lo, int hi, int) {
    for (int i = lo; i < hi; ++i) {
      const Example& ex = set[static_cast<std::size_t>(i)];
      const ProblemSplit split = example_split(ex, naux);
      const std::vector<int> targets = example_targets(ex, naux);
      const Matrix v_in = example_inputs(ex, split, k);
      const EmbeddingState state =
          fwd(v_in, split, child_seed(seed, {3ULL, static_cast<std::uint64_t>(i)}));
      degen[static_cast<std::size_t>(i)] = state.degenerate ? 1 : 0;
      losses[static_cast<std::size_t>(i)] = probs_and_loss(state, split, targets).loss;
      const int nt = static_cast<int>(ex.assignment.size());
      Vector p(nt);
      const Vector vt = state.V.col(split.truth);
      for (int v = 0; v < nt; ++v) {
        if (ex.input_mask[static_cast<std::size_t>(v)])
          p(v) = static_cast<double>(ex.assignment[static_cast<std::size_t>(v)]);
        else
          p(v) = (1.0 + vt.dot(state.V.col(1 + v))) / 2.0;
      }
      probs[static_cast<std::size_t>(i)] = std::move(p);
    }
  });
  for (int i = 0; i < total; ++i) {
    out.loss += losses[static_cast<std::size_t>(i)];
    out.degenerate += degen[static_cast<std::size_t>(i)];
  }
  out.loss /= total;
  out.board_acc = board_accuracy(probs, set);
  long entries = 0, correct = 0;
  for (int i = 0; i < total; ++i) {
    const Example& ex = set[static_cast<std::size_t>(i)];
    const int bs = task_block_size(ex.task);
    const int blocks = static_cast<int>(ex.assignment.size()) / bs;
    for (int b = 0; b < blocks; ++b) {
      if (ex.input_mask[static_cast<std::size_t>(b * bs)]) continue;
      int best = 0, truth = 0;
      for (int v = 0; v < bs; ++v) {
        const auto& p = probs[static_cast<std::size_t>(i)];
        if (p(b * bs + v) > p(b * bs + best)) best = v;
        if (ex.assignment[static_cast<std::size_t>(b * bs + v)]) truth = v;
      }
      ++entries;
      if (best == truth) ++correct;
    }
  }
  out.entry_acc = entries > 0 ? static_cast<double>(correct) / static_cast<double>(entries) : 0.0;
  return out;
}

}  // namespace detail

inline EvalResult evaluate_with_C(const Matrix& c, int naux, int k, const std::vector<Example>& set,
                                  std::uint64_t seed, const ForwardOptions& opts = {},
                                  int threads = 1) {
  return detail::eval_impl(
      [&](const Matrix& v_in, const ProblemSplit& split, std::uint64_t s) {
        return forward(c, v_in, split, s, opts);
      },
      naux, k, set, seed, threads);
}

inline EvalResult evaluate(const Model& model, const std::vector<Example>& set, std::uint64_t seed,
                           const ForwardOptions& opts = {}, int threads = 1) {
  if (model.is_sym()) return evaluate_with_C(assemble_C(model.sym), model.naux, model.k, set, seed, opts, threads);
  return detail::eval_impl(
      [&](const Matrix& v_in, const ProblemSplit& split, std::uint64_t s) {
        return forward(model.plain, v_in, split, s, opts);
      },
      model.naux, model.k, set, seed, threads);
}

// ---------------------------------------------------------------------------
// Reports

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double board_accuracy = 0.0;
  double seconds = 0.0;
  double projection_error = 0.0;
};

struct ValidationDecision {
  std::vector<int> path;
  std::string leaf;
  double improvement = 0.0;
  bool kept = false;
};

struct RunReport {
  std::string model;
  std::string task;
  std::string group;  // group the final model trains under; empty for plain
  std::uint64_t seed = 0;
  std::vector<EpochRow> rows;
  std::string discovered_group;  // auto runs
  std::vector<int> sigma;
  double discovered_distance = 0.0;
  std::vector<ValidationDecision> validation;
  bool degenerated_to_plain = false;
  int nonconverged_backward = 0;
  int degenerate_forward = 0;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string report_csv(const RunReport& report) {
  std::ostringstream os;
  os << "epoch,train_loss,test_loss,board_accuracy,seconds,projection_error\n";
  for (const EpochRow& row : report.rows) {
    os << row.epoch << ',' << format_double(row.train_loss) << ',' << format_double(row.test_loss)
       << ',' << format_double(row.board_accuracy) << ',' << format_double(row.seconds) << ','
       << format_double(row.projection_error) << '\n';
  }
  return os.str();
}

inline nlohmann::json config_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["model"] = cfg.model;
  j["task"] = cfg.task;
  j["group"] = cfg.group;
  j["epochs"] = cfg.epochs;
  j["batch"] = cfg.batch;
  j["lr"] = cfg.lr;
  j["m"] = cfg.m;
  j["k"] = cfg.k;
  j["naux"] = cfg.naux;
  j["seed"] = cfg.seed;
  j["symfind_epoch"] = cfg.symfind_epoch;
  j["corruption"] = cfg.corruption;
  j["validation_threshold"] = cfg.validation_threshold;
  j["entry_level"] = cfg.entry_level;
  j["skip_validation"] = cfg.skip_validation;
  j["threads"] = cfg.threads;
  j["lambda1"] = cfg.symfind.lambda1;
  j["lambda2"] = cfg.symfind.lambda2;
  return j;
}

inline nlohmann::json report_json(const TrainConfig& cfg, const RunReport& report) {
  nlohmann::json j;
  j["config"] = config_json(cfg);
  j["model"] = report.model;
  j["task"] = report.task;
  j["group"] = report.group;
  j["seed"] = report.seed;
  j["epochs"] = report.rows.empty() ? 0 : report.rows.back().epoch;
  j["discovered_group"] = report.discovered_group;
  j["sigma"] = report.sigma;
  j["discovered_distance"] = report.discovered_distance;
  j["degenerated_to_plain"] = report.degenerated_to_plain;
  j["nonconverged_backward"] = report.nonconverged_backward;
  j["degenerate_forward"] = report.degenerate_forward;
  j["validation"] = nlohmann::json::array();
  for (const ValidationDecision& d : report.validation) {
    nlohmann::json e;
    e["path"] = d.path;
    e["leaf"] = d.leaf;
    e["improvement"] = d.improvement;
    e["kept"] = d.kept;
    j["validation"].push_back(e);
  }
  if (!report.rows.empty()) {
    const EpochRow& last = report.rows.back();
    j["final_test_loss"] = last.test_loss;
    j["final_board_accuracy"] = last.board_accuracy;
    j["final_projection_error"] = last.projection_error;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Training

struct PhaseConfig {
  int epochs = 0;
  int batch = 40;
  double lr = 2e-3;
  std::uint64_t seed = 0;
  int epoch_offset = 0;   // rows are numbered epoch_offset [+init] .. epoch_offset+epochs
  bool emit_init = true;  // record pre-training metrics as the first row
  int threads = 1;
  ForwardOptions fwd;
  BackwardOptions bwd;
  const PairPartition* proj_ref = nullptr;  // task-block reference partition
};

inline double relative_projection_error(const Matrix& c_task, const PairPartition& ref) {
  const double norm = c_task.norm();
  if (norm <= 0.0) return 0.0;
  return projection_distance(c_task, ref) / norm;
}

// Runs the optimization loop on an initialized model, appending one row per
// epoch to the report. Gradients are averaged over each batch; the streams
// for shuffling and forward initialization derive from the phase seed, and a
// forward seed depends on the example's dataset index, not its position in
// the shuffled order.
inline void train_model(Model& model, const std::vector<Example>& train_set,
                        const std::vector<Example>& test_set, const PhaseConfig& phase,
                        RunReport& report) {
  if (phase.epochs < 0) throw std::invalid_argument("train_model: negative epoch count");
  if (phase.lr <= 0.0) throw std::invalid_argument("train_model: learning rate must be positive");
  if (phase.epochs > 0 && train_set.empty())
    throw std::invalid_argument("train_model: empty training set");
  for (const Example& ex : train_set)
    if (ex.task != model.task) throw std::invalid_argument("train_model: dataset task does not match model");
  for (const Example& ex : test_set)
    if (ex.task != model.task) throw std::invalid_argument("train_model: dataset task does not match model");

  const int total = static_cast<int>(train_set.size());
  const int batch = std::max(1, phase.batch);
  AdamState adam;

  const auto emit_row = [&](int epoch, double train_loss, double seconds_so_far) {
    const auto t0 = std::chrono::steady_clock::now();
    const EvalResult ev = evaluate(model, test_set, phase.seed, phase.fwd, phase.threads);
    EpochRow row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    row.test_loss = ev.loss;
    row.board_accuracy = ev.board_acc;
    row.projection_error =
        phase.proj_ref ? relative_projection_error(task_block_C(model), *phase.proj_ref)
                       : std::numeric_limits<double>::quiet_NaN();
    const auto t1 = std::chrono::steady_clock::now();
    row.seconds = seconds_so_far + std::chrono::duration<double>(t1 - t0).count();
    report.rows.push_back(row);
  };

  if (phase.emit_init) emit_row(phase.epoch_offset, std::numeric_limits<double>::quiet_NaN(), 0.0);

  const int chunk_count = std::max(1, std::min(phase.threads, batch));
  std::vector<Vector> theta_parts(static_cast<std::size_t>(chunk_count));
  std::vector<Matrix> s_parts(static_cast<std::size_t>(chunk_count));
  std::vector<double> loss_parts(static_cast<std::size_t>(chunk_count));
  std::vector<int> bad_backward(static_cast<std::size_t>(chunk_count));
  std::vector<int> bad_forward(static_cast<std::size_t>(chunk_count));

  for (int e = 1; e <= phase.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const int epoch = phase.epoch_offset + e;
    std::vector<int> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng::derive(phase.seed, {1ULL, static_cast<std::uint64_t>(epoch)});
    for (int i = total - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.bounded(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    double epoch_loss = 0.0;
    for (int start = 0; start < total; start += batch) {
      const int bs = std::min(batch, total - start);
      Matrix c_batch;
      if (model.is_sym()) c_batch = assemble_C(model.sym);
      std::fill(loss_parts.begin(), loss_parts.end(), 0.0);
      std::fill(bad_backward.begin(), bad_backward.end(), 0);
      std::fill(bad_forward.begin(), bad_forward.end(), 0);
      detail::run_chunked(bs, phase.threads, [&](int lo, int hi, int chunk) {
        Vector local_theta;
        Matrix local_s;
        if (model.is_sym())
          local_theta = Vector::Zero(model.sym.theta.size());
        else
          local_s = Matrix::Zero(model.plain.S.rows(), model.plain.S.cols());
        for (int pos = lo; pos < hi; ++pos) {
          const int idx = order[static_cast<std::size_t>(start + pos)];
          const Example& ex = train_set[static_cast<std::size_t>(idx)];
          const ProblemSplit split = example_split(ex, model.naux);
          const std::vector<int> targets = example_targets(ex, model.naux);
          const Matrix v_in = example_inputs(ex, split, model.k);
          const std::uint64_t fseed = child_seed(
              phase.seed, {2ULL, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(idx)});
          EmbeddingState state;
          if (model.is_sym())
            state = forward(c_batch, v_in, split, fseed, phase.fwd);
          else
            state = forward(model.plain, v_in, split, fseed, phase.fwd);
          if (state.degenerate) ++bad_forward[static_cast<std::size_t>(chunk)];
          const LossResult loss = probs_and_loss(state, split, targets);
          if (!std::isfinite(loss.loss) || !state.V.allFinite())
            throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                                 ", example " + std::to_string(idx));
          loss_parts[static_cast<std::size_t>(chunk)] += loss.loss;
          TrainGrads grads;
          if (model.is_sym()) {
            grads = training_backward(model.sym, c_batch, state, split, loss.dV, phase.bwd);
            local_theta += grads.dtheta;
          } else {
            grads = training_backward(model.plain, state, split, loss.dV, phase.bwd);
            local_s += grads.dS;
          }
          if (!grads.converged) ++bad_backward[static_cast<std::size_t>(chunk)];
        }
        if (model.is_sym())
          theta_parts[static_cast<std::size_t>(chunk)] = std::move(local_theta);
        else
          s_parts[static_cast<std::size_t>(chunk)] = std::move(local_s);
      });
      const int used = std::max(1, std::min(phase.threads, bs));
      if (model.is_sym()) {
        Vector g = Vector::Zero(model.sym.theta.size());
        for (int c = 0; c < used; ++c) g += theta_parts[static_cast<std::size_t>(c)];
        g /= static_cast<double>(bs);
        adam_step(model.sym.theta, g, adam, phase.lr);
      } else {
        Matrix g = Matrix::Zero(model.plain.S.rows(), model.plain.S.cols());
        for (int c = 0; c < used; ++c) g += s_parts[static_cast<std::size_t>(c)];
        g /= static_cast<double>(bs);
        adam_step_matrix(model.plain.S, g, adam, phase.lr);
      }
      for (int c = 0; c < used; ++c) {
        epoch_loss += loss_parts[static_cast<std::size_t>(c)];
        report.nonconverged_backward += bad_backward[static_cast<std::size_t>(c)];
        report.degenerate_forward += bad_forward[static_cast<std::size_t>(c)];
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    emit_row(epoch, epoch_loss / total, std::chrono::duration<double>(t1 - t0).count());
  }
}

inline RunReport train(const TrainConfig& cfg, const std::vector<Example>& train_set,
                       const std::vector<Example>& test_set, Model* trained = nullptr) {
  if (cfg.model == "auto")
    throw std::invalid_argument("train: the auto procedure needs a validation set; use auto_run");
  Model model = init_model(cfg, child_seed(cfg.seed, {0ULL}));
  RunReport report;
  report.model = cfg.model;
  report.task = cfg.task;
  report.group = model.group_label;
  report.seed = cfg.seed;
  const PairPartition ref = task_partition(cfg.task);
  PhaseConfig phase;
  phase.epochs = cfg.epochs;
  phase.batch = cfg.batch;
  phase.lr = resolve_lr(cfg, model.is_sym());
  phase.seed = cfg.seed;
  phase.threads = cfg.threads;
  phase.fwd = cfg.forward_opts;
  phase.bwd = cfg.backward_opts;
  phase.proj_ref = &ref;
  train_model(model, train_set, test_set, phase, report);
  if (trained) *trained = model;
  return report;
}

// ---------------------------------------------------------------------------
// Component masking and validation

inline GroupExpr mask_component(const GroupExpr& g, const std::vector<int>& keep_path) {
  const auto paths = g.leaf_paths();
  if (std::find(paths.begin(), paths.end(), keep_path) == paths.end())
    throw std::invalid_argument("mask_component: path does not address a leaf");
  return mask_leaves(g, {keep_path});
}

struct ValidationOutcome {
  GroupExpr expr = GroupExpr::trivial(1);
  std::vector<ValidationDecision> decisions;
};

// Projects the warm-up C onto each single-component mask of g and keeps the
// components whose projected accuracy on the validation set improves on the
// unprojected snapshot by more than the threshold. No retraining happens.
inline ValidationOutcome validate_components(const GroupExpr& g, const Perm& sigma,
                                             const Model& snapshot,
                                             const std::vector<Example>& val_set, double threshold,
                                             std::uint64_t seed, bool entry_level = false,
                                             const ForwardOptions& fwd = {}, int threads = 1) {
  if (g.degree() != snapshot.n_task())
    throw std::invalid_argument("validate_components: group degree does not match task");
  const Matrix c_full = full_C(snapshot);
  const int nt = snapshot.n_task();
  const auto score = [&](const Matrix& c) {
    const EvalResult ev = evaluate_with_C(c, snapshot.naux, snapshot.k, val_set, seed, fwd, threads);
    return entry_level ? ev.entry_acc : ev.board_acc;
  };
  const double base = score(c_full);
  ValidationOutcome out;
  std::vector<std::vector<int>> kept;
  for (const auto& path : g.leaf_paths()) {
    const GroupExpr masked = mask_component(g, path);
    const PairPartition part = conjugate(basis_from_theorem(masked), sigma);
    Matrix c_proj = c_full;
    c_proj.block(1, 1, nt, nt) = reynolds_project(c_full.block(1, 1, nt, nt), part);
    ValidationDecision decision;
    decision.path = path;
    decision.leaf = format_group_expr(g.at(path));
    decision.improvement = score(c_proj) - base;
    decision.kept = decision.improvement > threshold;
    if (decision.kept) kept.push_back(path);
    out.decisions.push_back(std::move(decision));
  }
  out.expr = kept.empty() ? GroupExpr::trivial(g.degree()) : mask_leaves(g, kept);
  return out;
}

// ---------------------------------------------------------------------------
// The auto procedure: plain warm-up, discovery, component validation,
// projection initialization, symmetric training. force_group skips discovery
// and validation, pinning the group with an identity conjugation.

inline RunReport auto_run(const TrainConfig& cfg, const std::vector<Example>& train_set,
                          const std::vector<Example>& val_set, const std::vector<Example>& test_set,
                          const GroupExpr* force_group = nullptr, Model* trained = nullptr) {
  const int t_warm = resolve_symfind_epoch(cfg);
  if (cfg.epochs < t_warm)
    throw std::invalid_argument("auto_run: epochs must cover the warm-up length");
  const std::uint64_t warm_seed = child_seed(cfg.seed, {1ULL});
  const std::uint64_t sym_seed = child_seed(cfg.seed, {2ULL});

  RunReport report;
  report.model = "auto";
  report.task = cfg.task;
  report.seed = cfg.seed;

  TrainConfig warm_cfg = cfg;
  warm_cfg.model = "plain";
  Model model = init_model(warm_cfg, child_seed(warm_seed, {0ULL}));
  const PairPartition ref = task_partition(cfg.task);
  PhaseConfig phase;
  phase.batch = cfg.batch;
  phase.threads = cfg.threads;
  phase.fwd = cfg.forward_opts;
  phase.bwd = cfg.backward_opts;
  phase.proj_ref = &ref;

  phase.epochs = t_warm;
  phase.lr = 2e-3;
  phase.seed = warm_seed;
  phase.epoch_offset = 0;
  phase.emit_init = true;
  train_model(model, train_set, test_set, phase, report);

  const Matrix c_task = task_block_C(model);
  GroupExpr expr = GroupExpr::trivial(model.n_task());
  Perm sigma = Perm::identity(model.n_task());
  if (force_group) {
    expr = *force_group;
    const double norm = c_task.norm();
    report.discovered_distance =
        norm > 0.0 ? projection_distance(c_task, basis_from_theorem(expr)) / norm : 0.0;
  } else {
    SymFindResult found = sym_find(c_task, cfg.symfind);
    expr = std::move(found.expr);
    sigma = std::move(found.sigma);
    report.discovered_distance = found.distance;
  }
  report.discovered_group = format_group_expr(expr);
  report.sigma = sigma.images();

  GroupExpr pruned = expr;
  if (!expr.is_trivial_group() && !force_group && !cfg.skip_validation) {
    ValidationOutcome outcome =
        validate_components(expr, sigma, model, val_set, resolve_validation_threshold(cfg),
                            warm_seed, cfg.entry_level, cfg.forward_opts, cfg.threads);
    pruned = std::move(outcome.expr);
    report.validation = std::move(outcome.decisions);
  }

  phase.epochs = cfg.epochs - t_warm;
  phase.seed = sym_seed;
  phase.epoch_offset = t_warm;
  phase.emit_init = false;

  if (pruned.is_trivial_group()) {
    report.degenerated_to_plain = true;
    phase.lr = 2e-3;
    train_model(model, train_set, test_set, phase, report);
    if (trained) *trained = model;
    return report;
  }

  Model sym_model;
  sym_model.kind = "sym";
  sym_model.task = cfg.task;
  sym_model.naux = 0;
  sym_model.k = cfg.k;
  sym_model.group_label = format_group_expr(pruned);
  const std::vector<int>& images = sigma.images();
  bool identity = true;
  for (std::size_t i = 0; i < images.size(); ++i)
    if (images[i] != static_cast<int>(i)) identity = false;
  if (!identity) sym_model.sigma = images;
  sym_model.sym.basis = conjugate(basis_from_theorem(pruned), sigma);
  sym_model.sym.offset = 1;
  sym_model.sym.theta = cell_means(c_task, sym_model.sym.basis);
  report.group = sym_model.group_label;

  phase.lr = resolve_lr(cfg, true);
  train_model(sym_model, train_set, test_set, phase, report);
  if (trained) *trained = sym_model;
  return report;
}

// ---------------------------------------------------------------------------
// SymFind recovery benchmark

struct BenchSpec {
  GroupExpr expr = GroupExpr::trivial(1);
  bool random_sigma = true;
};

struct BenchRow {
  std::string group;
  int runs = 0;
  int full = 0;
  int partial = 0;
  double full_acc = 0.0;
  double partial_acc = 0.0;
};

inline std::vector<BenchRow> symfind_bench(const std::vector<BenchSpec>& specs, double omega,
                                           int runs, std::uint64_t seed,
                                           const SymFindConfig& cfg = {}, int threads = 1) {
  if (runs < 1) throw std::invalid_argument("symfind_bench: runs must be positive");
  std::vector<BenchRow> rows;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const BenchSpec& spec = specs[s];
    const int n = spec.expr.degree();
    const PairPartition base = basis_from_theorem(spec.expr);
    std::vector<char> fulls(static_cast<std::size_t>(runs), 0);
    std::vector<char> partials(static_cast<std::size_t>(runs), 0);
    detail::run_chunked(runs, threads, [&](int lo, int hi, int) {
      for (int r = lo; r < hi; ++r) {
        Rng rng = Rng::derive(seed, {4ULL, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(r)});
        const Perm sig = spec.random_sigma ? Perm::random(n, rng) : Perm::identity(n);
        const PairPartition target = conjugate(base, sig);
        Matrix m = random_equivariant(target, rng);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) m(i, j) += omega * rng.normal();
        const SymFindResult res = sym_find(m, cfg);
        const PairPartition found = conjugate(basis_from_theorem(res.expr), res.sigma);
        const bool full = same_partition(found, target);
        const bool partial = !res.expr.is_trivial_group() && is_refinement(found, target);
        fulls[static_cast<std::size_t>(r)] = full ? 1 : 0;
        partials[static_cast<std::size_t>(r)] = partial ? 1 : 0;
      }
    });
    BenchRow row;
    row.group = format_group_expr(spec.expr);
    row.runs = runs;
    for (int r = 0; r < runs; ++r) {
      row.full += fulls[static_cast<std::size_t>(r)];
      row.partial += partials[static_cast<std::size_t>(r)];
    }
    row.full_acc = static_cast<double>(row.full) / runs;
    row.partial_acc = static_cast<double>(row.partial) / runs;
    rows.push_back(std::move(row));
  }
  return rows;
}

// Wilson score interval for a binomial proportion.
inline std::pair<double, double> binomial_ci(int successes, int trials, double z = 1.96) {
  if (trials <= 0) return {0.0, 1.0};
  const double p = static_cast<double>(successes) / trials;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / trials;
  const double center = (p + z2 / (2.0 * trials)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// ---------------------------------------------------------------------------
// Transfer runs: train and test sets generated at different difficulties.

inline std::vector<Example> generate_task(const std::string& task, int count,
                                          const std::string& difficulty, std::uint64_t seed) {
  if (task == "sudoku9") return sudoku_generate(count, sudoku_difficulty(difficulty).count, seed);
  if (task == "cube333") return cube_generate(count, cube_difficulty(difficulty).count, seed);
  throw std::invalid_argument("unknown task: " + task);
}

inline RunReport transfer_run(const TrainConfig& cfg, const std::string& train_difficulty,
                              const std::string& test_difficulty, int train_count, int test_count,
                              Model* trained = nullptr) {
  std::vector<Example> train_set =
      generate_task(cfg.task, train_count, train_difficulty, child_seed(cfg.seed, {6ULL, 0ULL}));
  std::vector<Example> test_set =
      generate_task(cfg.task, test_count, test_difficulty, child_seed(cfg.seed, {6ULL, 1ULL}));
  if (cfg.corruption > 0) corrupt(train_set, cfg.corruption, child_seed(cfg.seed, {6ULL, 2ULL}));
  if (cfg.model == "auto") {
    const std::vector<Example> val_set =
        generate_task(cfg.task, test_count, train_difficulty, child_seed(cfg.seed, {6ULL, 3ULL}));
    return auto_run(cfg, train_set, val_set, test_set, nullptr, trained);
  }
  return train(cfg, train_set, test_set, trained);
}

}  // namespace symsat
