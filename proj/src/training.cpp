#include "ac/training.hpp"

#include <cmath>
#include <ostream>

#include "nlohmann/json.hpp"

namespace ac {

void TrainConfig::validate() const {
    if (learning_rate <= 0) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    if (warmup_steps <= 0 || max_steps <= 0 || batch_size <= 0 || tgt_len <= 0 ||
        eval_interval <= 0)
        throw std::invalid_argument("TrainConfig: step/batch/length fields must be positive");
    if (mem_len < 0) throw std::invalid_argument("TrainConfig: mem_len must be nonnegative");
    if (clip_norm <= 0) throw std::invalid_argument("TrainConfig: clip_norm must be positive");
    if (warmup_steps > max_steps)
        throw std::invalid_argument("TrainConfig: warmup_steps must be <= max_steps");
}

nlohmann::json TrainConfig::to_json() const {
    return nlohmann::json{{"learning_rate", learning_rate}, {"warmup_steps", warmup_steps},
                          {"max_steps", max_steps},         {"batch_size", batch_size},
                          {"tgt_len", tgt_len},             {"mem_len", mem_len},
                          {"seed", seed},                   {"eval_interval", eval_interval},
                          {"clip_norm", clip_norm}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.warmup_steps = j.at("warmup_steps").get<std::int64_t>();
    c.max_steps = j.at("max_steps").get<std::int64_t>();
    c.batch_size = j.at("batch_size").get<std::int64_t>();
    c.tgt_len = j.at("tgt_len").get<std::int64_t>();
    c.mem_len = j.at("mem_len").get<std::int64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.eval_interval = j.at("eval_interval").get<std::int64_t>();
    c.clip_norm = j.at("clip_norm").get<double>();
    return c;
}

BatchIterator::BatchIterator(std::vector<std::int32_t> tokens, std::int64_t batch_size,
                             std::int64_t tgt_len)
    : tokens_(std::move(tokens)), batch_size_(batch_size), tgt_len_(tgt_len) {
    const auto n = static_cast<std::int64_t>(tokens_.size());
    if (n < batch_size_ * (tgt_len_ + 1))
        throw std::invalid_argument("BatchIterator: corpus of " + std::to_string(n) +
                                    " tokens is too small for batch " +
                                    std::to_string(batch_size_) + " x tgt_len " +
                                    std::to_string(tgt_len_));
    lane_len_ = n / batch_size_;
    steps_per_epoch_ = (lane_len_ - 1) / tgt_len_;
}

bool BatchIterator::next(std::vector<std::int32_t>& input, std::vector<std::int32_t>& target) {
    if (step_ >= steps_per_epoch_) {
        step_ = 0;
        return false;
    }
    input.resize(static_cast<std::size_t>(batch_size_ * tgt_len_));
    target.resize(static_cast<std::size_t>(batch_size_ * tgt_len_));
    const std::int64_t off = step_ * tgt_len_;
    for (std::int64_t b = 0; b < batch_size_; ++b) {
        const std::int32_t* lane = tokens_.data() + b * lane_len_;
        for (std::int64_t t = 0; t < tgt_len_; ++t) {
            input[static_cast<std::size_t>(b * tgt_len_ + t)] = lane[off + t];
            target[static_cast<std::size_t>(b * tgt_len_ + t)] = lane[off + t + 1];
        }
    }
    ++step_;
    return true;
}

TrainDivergence::TrainDivergence(std::int64_t step_, double lr_, double grad_norm_)
    : std::runtime_error("training diverged: loss is NaN at step " + std::to_string(step_) +
                         " (lr " + std::to_string(lr_) + ", grad norm " +
                         std::to_string(grad_norm_) + ")"),
      step(step_),
      lr(lr_),
      grad_norm(grad_norm_) {}

double lr_at_step(const TrainConfig& cfg, std::int64_t step) {
    if (step <= cfg.warmup_steps)
        return cfg.learning_rate * static_cast<double>(step) /
               static_cast<double>(cfg.warmup_steps);
    if (cfg.max_steps == cfg.warmup_steps) return cfg.learning_rate;
    const double progress = static_cast<double>(step - cfg.warmup_steps) /
                            static_cast<double>(cfg.max_steps - cfg.warmup_steps);
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

namespace {

struct AdamState {
    std::vector<ArrayF> m, v;
};

constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

}  // namespace

TrainResult train(DecoderModel& model, const std::vector<std::int32_t>& corpus_tokens,
                  const TrainConfig& cfg, std::ostream* progress) {
    cfg.validate();
    BatchIterator batches(corpus_tokens, cfg.batch_size, cfg.tgt_len);
    Rng rng(cfg.seed);
    Rng dropout_rng = rng.fork(0x9d0f);

    AdamState adam;
    for (auto& p : model.params()) {
        adam.m.emplace_back(p.var.shape(), 0.0f);
        adam.v.emplace_back(p.var.shape(), 0.0f);
    }

    MemoryT<float> memory;
    MethodStateT<float> mstate;
    TrainResult result;
    std::vector<std::int32_t> input, target;
    double beta1_t = 1.0, beta2_t = 1.0;

    for (std::int64_t step = 1; step <= cfg.max_steps; ++step) {
        if (!batches.next(input, target)) {
            // epoch wrap: lanes restart at their beginnings
            memory.clear();
            batches.next(input, target);
        }
        // Word-information state restarts with every training segment.
        mstate.reset(cfg.batch_size, model.config().d_model);

        for (auto& p : model.params()) p.var.zero_grad();
        Var logits = model.forward_batch(input, cfg.batch_size, cfg.tgt_len,
                                         cfg.mem_len > 0 ? &memory : nullptr, cfg.mem_len,
                                         &mstate, true, &dropout_rng);
        Var loss = cross_entropy(softmax_rows(logits), target);
        const double loss_v = static_cast<double>(loss.val()[0]);
        backward(loss);

        double sq = 0.0;
        for (auto& p : model.params()) {
            const auto& g = p.var.grad();
            if (g.numel()) sq += static_cast<double>(kern::dot(g.data(), g.data(), g.numel()));
        }
        const double grad_norm = std::sqrt(sq);
        const double lr = lr_at_step(cfg, step);
        if (std::isnan(loss_v) || std::isnan(grad_norm))
            throw TrainDivergence(step, lr, grad_norm);

        const float clip_scale =
            grad_norm > cfg.clip_norm ? static_cast<float>(cfg.clip_norm / grad_norm) : 1.0f;

        beta1_t *= kBeta1;
        beta2_t *= kBeta2;
        const double corr = std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
        for (std::size_t pi = 0; pi < model.params().size(); ++pi) {
            auto& p = model.params()[pi].var;
            const auto& g = p.grad();
            if (!g.numel()) continue;
            auto& m = adam.m[pi];
            auto& v = adam.v[pi];
            float* x = p.val().data();
            for (std::int64_t i = 0; i < g.numel(); ++i) {
                const float gi = g[i] * clip_scale;
                m[i] = static_cast<float>(kBeta1) * m[i] + static_cast<float>(1.0 - kBeta1) * gi;
                v[i] = static_cast<float>(kBeta2) * v[i] +
                       static_cast<float>(1.0 - kBeta2) * gi * gi;
                x[i] -= static_cast<float>(lr * corr) * m[i] /
                        (std::sqrt(v[i]) + static_cast<float>(kAdamEps));
            }
        }

        result.trace.push_back({step, loss_v, lr, grad_norm});
        if (progress && (step % cfg.eval_interval == 0 || step == cfg.max_steps))
            (*progress) << "step " << step << " loss " << loss_v << " lr " << lr << " grad_norm "
                        << grad_norm << "\n";
    }
    if (!result.trace.empty()) result.final_loss = result.trace.back().loss;
    return result;
}

void write_loss_trace_csv(std::ostream& os, const std::vector<StepStat>& trace) {
    os << "step,loss,lr,grad_norm\n";
    for (const auto& s : trace)
        os << s.step << ',' << s.loss << ',' << s.lr << ',' << s.grad_norm << '\n';
}

}  // namespace ac
