#include "loadcnn/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "loadcnn/rng.hpp"

namespace loadcnn {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ValueError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValueError("batch_size must be >= 1");
  if (max_epochs < 0) throw ValueError("max_epochs must be >= 0");
  if (learning_rate <= 0.0) throw ValueError("learning_rate must be positive");
  if (decay_rate <= 0.0 || decay_rate > 1.0) throw ValueError("decay_rate must be in (0, 1]");
  if (validation_interval_steps < 1) throw ValueError("validation_interval_steps must be >= 1");
  if (max_steps < 0) throw ValueError("max_steps must be >= 0");
}

double lr_schedule(double base_lr, double decay_rate, int epoch) {
  if (epoch < 0) throw ValueError("epoch must be >= 0");
  return base_lr * std::pow(decay_rate, epoch);
}

OptimizerState OptimizerState::create(OptimizerKind kind, const LoadCNNParams& params) {
  OptimizerState s;
  s.kind = kind;
  params.for_each([&s](const std::string&, const Tensor& t) {
    s.m.emplace_back(t.size(), 0.0);
    s.v.emplace_back(t.size(), 0.0);
  });
  return s;
}

void optimizer_step(LoadCNNParams& params, const LoadCNNParams& grads, OptimizerState& state,
                    double step_lr) {
  std::vector<Tensor*> ps, gs;
  params.for_each([&ps](const std::string&, Tensor& t) { ps.push_back(&t); });
  const_cast<LoadCNNParams&>(grads).for_each(
      [&gs](const std::string&, Tensor& t) { gs.push_back(&t); });
  if (ps.size() != gs.size() || ps.size() != state.m.size()) {
    throw ShapeError("optimizer state does not match parameter tensor count");
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!ps[i]->same_shape(*gs[i])) {
      throw ShapeError("gradient tensor " + std::to_string(i) + " has shape " +
                       shape_to_string(gs[i]->shape()) + ", parameter has " +
                       shape_to_string(ps[i]->shape()));
    }
  }

  if (state.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      double* p = ps[i]->data();
      const double* g = gs[i]->data();
      for (std::size_t k = 0; k < ps[i]->size(); ++k) p[k] -= step_lr * g[k];
    }
    ++state.t;
    return;
  }

  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    double* p = ps[i]->data();
    const double* g = gs[i]->data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (std::size_t k = 0; k < ps[i]->size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= step_lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

std::int64_t monotone_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

double TrainLog::training_hours() const {
  std::int64_t first = 0, last = 0;
  bool any = false;
  auto take = [&](std::int64_t ts) {
    if (!any) {
      first = last = ts;
      any = true;
    } else {
      first = std::min(first, ts);
      last = std::max(last, ts);
    }
  };
  for (const StepRecord& s : steps) take(s.timestamp_ms);
  for (const ValRecord& v : validations) take(v.timestamp_ms);
  return any ? static_cast<double>(last - first) / 3.6e6 : 0.0;
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "step,epoch,lr,train_loss,val_loss,timestamp_ms\n";
  std::size_t vi = 0;
  // The step-0 validation of the initial parameters, if present.
  if (vi < validations.size() && validations[vi].step == 0) {
    const ValRecord& v = validations[vi++];
    out << "0,0,,," << format_double(v.val_loss) << ',' << v.timestamp_ms << '\n';
  }
  for (const StepRecord& s : steps) {
    out << s.step << ',' << s.epoch << ',' << format_double(s.lr) << ','
        << format_double(s.train_loss) << ',';
    if (vi < validations.size() && validations[vi].step == s.step) {
      out << format_double(validations[vi].val_loss);
      ++vi;
    }
    out << ',' << s.timestamp_ms << '\n';
  }
}

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& validation_set,
                  const LoadCNNConfig& model_config, const TrainConfig& train_config,
                  const TrainHooks& hooks) {
  train_config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  if (validation_set.empty()) throw DataError("validation set is empty");

  LoadCNNParams params = init_params(model_config, train_config.seed + seed_offset::init);
  OptimizerState opt = OptimizerState::create(train_config.optimizer, params);
  Rng shuffle_rng(train_config.seed + seed_offset::shuffle);
  Rng val_rng(train_config.seed + seed_offset::validation);

  TrainResult result;
  result.checkpoint.model_config = model_config;
  result.checkpoint.train_config = train_config;
  TrainLog& log = result.log;

  auto validation_loss = [&]() {
    std::vector<const Sample*> batch;
    if (train_config.full_validation ||
        validation_set.size() <= static_cast<std::size_t>(train_config.batch_size)) {
      for (const Sample& s : validation_set) batch.push_back(&s);
    } else {
      // One random validation batch, drawn without replacement.
      std::vector<std::size_t> idx(validation_set.size());
      std::iota(idx.begin(), idx.end(), 0);
      for (int k = 0; k < train_config.batch_size; ++k) {
        const std::size_t j = k + val_rng.below(idx.size() - k);
        std::swap(idx[k], idx[j]);
        batch.push_back(&validation_set[idx[k]]);
      }
    }
    return batch_loss(params, batch);
  };

  // Score the initial parameters so the checkpoint can only improve on them.
  double loss_best = validation_loss();
  log.validations.push_back({0, loss_best, monotone_now_ms()});
  LoadCNNParams best = params;
  long best_step = 0;
  int best_epoch = 0;

  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  long step = 0;
  bool done = false;
  for (int epoch = 0; epoch < train_config.max_epochs && !done; ++epoch) {
    shuffle_rng.shuffle(order);
    const double epoch_lr =
        lr_schedule(train_config.learning_rate, train_config.decay_rate, epoch);

    for (std::size_t start = 0; start < order.size() && !done;
         start += static_cast<std::size_t>(train_config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(train_config.batch_size));
      std::vector<const Sample*> batch;
      std::vector<int> batch_indices;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_set[order[i]]);
        batch_indices.push_back(order[i]);
      }

      BatchResult br = batch_backward(params, batch, train_config.threads);
      ++step;
      if (!std::isfinite(br.mean_loss)) {
        std::ostringstream ids;
        for (std::size_t i = 0; i < batch_indices.size(); ++i) {
          if (i) ids << ' ';
          ids << batch_indices[i];
        }
        throw NumericError("non-finite training loss at step " + std::to_string(step) +
                           " (lr=" + format_double(epoch_lr) + ", batch=[" + ids.str() + "])");
      }
      optimizer_step(params, br.grads, opt, epoch_lr);
      log.steps.push_back({step, epoch, epoch_lr, br.mean_loss, monotone_now_ms()});
      if (hooks.on_batch) hooks.on_batch(step, epoch, batch_indices);

      if (step % train_config.validation_interval_steps == 0) {
        const double val = validation_loss();
        if (!std::isfinite(val)) {
          throw NumericError("non-finite validation loss at step " + std::to_string(step) +
                             " (lr=" + format_double(epoch_lr) + ")");
        }
        log.validations.push_back({step, val, monotone_now_ms()});
        if (val < loss_best) {
          loss_best = val;
          best = params;
          best_step = step;
          best_epoch = epoch;
        }
      }
      if (train_config.max_steps > 0 && step >= train_config.max_steps) done = true;
    }
  }

  result.checkpoint.params = std::move(best);
  result.checkpoint.loss_best = loss_best;
  result.checkpoint.step = best_step;
  result.checkpoint.epoch = best_epoch;
  return result;
}

}  // namespace loadcnn
