#pragma once
// Autoregressive LM training over contiguous batch lanes with carried
// segment memory. Adam, linear warmup into cosine decay, global-norm
// gradient clipping, per-step loss trace.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ac/model.hpp"

namespace ac {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::int64_t warmup_steps = 100;
    std::int64_t max_steps = 500;
    std::int64_t batch_size = 8;
    std::int64_t tgt_len = 64;
    std::int64_t mem_len = 64;
    std::uint64_t seed = 1;
    std::int64_t eval_interval = 100;
    double clip_norm = 0.25;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// Splits the corpus into batch_size contiguous lanes; successive segments of
// a lane are adjacent in the corpus so carried memory is meaningful. Wraps
// around at the end of an epoch.
class BatchIterator {
public:
    BatchIterator(std::vector<std::int32_t> tokens, std::int64_t batch_size,
                  std::int64_t tgt_len);

    // Fills input/target (batch*tgt_len each, target shifted by one). Returns
    // false at the epoch boundary and rewinds; the following call starts the
    // next epoch.
    bool next(std::vector<std::int32_t>& input, std::vector<std::int32_t>& target);
    void reset() { step_ = 0; }
    std::int64_t steps_per_epoch() const { return steps_per_epoch_; }

private:
    std::vector<std::int32_t> tokens_;
    std::int64_t batch_size_, tgt_len_, lane_len_, steps_per_epoch_, step_ = 0;
};

struct StepStat {
    std::int64_t step;
    double loss;
    double lr;
    double grad_norm;
};

struct TrainResult {
    std::vector<StepStat> trace;
    double final_loss = 0.0;
};

// Loss became NaN; carries the diagnostic the spec asks for.
struct TrainDivergence : std::runtime_error {
    TrainDivergence(std::int64_t step, double lr, double grad_norm);
    std::int64_t step;
    double lr;
    double grad_norm;
};

double lr_at_step(const TrainConfig& cfg, std::int64_t step);  // 1-based

TrainResult train(DecoderModel& model, const std::vector<std::int32_t>& corpus_tokens,
                  const TrainConfig& cfg, std::ostream* progress = nullptr);

void write_loss_trace_csv(std::ostream& os, const std::vector<StepStat>& trace);

}  // namespace ac
