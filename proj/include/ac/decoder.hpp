#pragma once
// Suggestion generation. Sessions wrap an autoregressive next-token
// distribution behind a small interface so decoding logic is testable with
// scripted stand-ins; the real session feeds a frozen decoder in tgt_len
// chunks and carries segment memory capped at eval_mem_len.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ac/model.hpp"
#include "ac/vocab.hpp"

namespace ac {

class LmSession {
public:
    virtual ~LmSession() = default;
    virtual void feed(const std::vector<int>& ids) = 0;
    // Next-token distribution after everything fed so far.
    virtual const std::vector<float>& dist() const = 0;
    virtual std::unique_ptr<LmSession> clone() const = 0;
    virtual std::int64_t vocab_size() const = 0;
};

// Session over a frozen model. The model outlives the session.
std::unique_ptr<LmSession> make_session(const DecoderModel& model);

// Consumes the prompt in tgt_len chunks, updating session state. Throws on
// an empty prompt.
void prompt_feed(LmSession& session, const std::vector<int>& prompt_tokens);

enum class StopReason { word_count, max_tokens, eos };
const char* stop_reason_name(StopReason r);

struct Suggestion {
    std::vector<std::string> words;
    std::vector<int> raw_tokens;
    std::vector<double> token_probs;  // chosen-token probability per raw token
    StopReason stopped_by = StopReason::max_tokens;
    // Product of token probabilities per completed word.
    std::vector<double> word_probs;
};

std::int64_t default_max_tokens(Granularity g, int k_words);

// Argmax decoding; ties break toward the lowest token id. Character models
// stop once k_words words are completed (space-delimited); if the prompt
// ends mid-word the first generated word-completion does not count. Word
// models stop after k_words tokens.
Suggestion greedy_suggest(LmSession& session, const Vocabulary& vocab,
                          const std::vector<int>& prompt_tokens, int k_words,
                          std::int64_t max_tokens = -1);

// Length-normalized beam search (score = logprob / generated tokens) with
// the same stopping rules. beam_size 1 reproduces greedy token for token.
Suggestion beam_suggest(LmSession& session, const Vocabulary& vocab,
                        const std::vector<int>& prompt_tokens, int k_words, int beam_size,
                        std::int64_t max_tokens = -1);

// Model-level conveniences.
Suggestion greedy_suggest(const DecoderModel& model, const Vocabulary& vocab,
                          const std::vector<int>& prompt_tokens, int k_words,
                          std::int64_t max_tokens = -1);
Suggestion beam_suggest(const DecoderModel& model, const Vocabulary& vocab,
                        const std::vector<int>& prompt_tokens, int k_words, int beam_size,
                        std::int64_t max_tokens = -1);

// Teacher-forced negative log likelihood of a continuation given the prompt
// already fed; clamps probabilities at 1e-9. Returns total nats and tokens.
std::pair<double, std::int64_t> continuation_nll(LmSession& session,
                                                 const std::vector<int>& continuation);

// Line-oriented REPL: reads prompts from `in`, prints suggestion words and
// per-word probabilities to `out` until EOF.
void suggest_repl(const DecoderModel& model, const Vocabulary& vocab, int k_words, bool beam,
                  int beam_size, std::istream& in, std::ostream& out);

}  // namespace ac
