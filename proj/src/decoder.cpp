#include "ac/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ac {

namespace {

class DecoderSession final : public LmSession {
public:
    explicit DecoderSession(const DecoderModel& model) : model_(&model) {
        const auto& cfg = model.config();
        if (cfg.method != Method::baseline) mstate_.reset(1, cfg.d_model);
    }

    void feed(const std::vector<int>& ids) override {
        const auto& cfg = model_->config();
        const std::int64_t chunk = cfg.tgt_len;
        NoGradGuard ng;
        for (std::size_t off = 0; off < ids.size();) {
            const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(chunk),
                                                        ids.size() - off);
            std::vector<std::int32_t> piece(ids.begin() + static_cast<std::ptrdiff_t>(off),
                                            ids.begin() + static_cast<std::ptrdiff_t>(off + n));
            const std::int64_t limit = std::max<std::int64_t>(cfg.eval_mem_len, 1);
            Var logits = model_->forward_batch(
                piece, 1, static_cast<std::int64_t>(n), &memory_, limit,
                cfg.method != Method::baseline ? &mstate_ : nullptr, false, nullptr);
            const ArrayF probs = softmax_rows(logits).val();
            const std::int64_t last = static_cast<std::int64_t>(n) - 1;
            dist_.assign(probs.data() + last * cfg.vocab_size,
                         probs.data() + (last + 1) * cfg.vocab_size);
            off += n;
        }
    }

    const std::vector<float>& dist() const override {
        if (dist_.empty()) throw std::logic_error("session: no tokens fed yet");
        return dist_;
    }

    std::unique_ptr<LmSession> clone() const override {
        return std::make_unique<DecoderSession>(*this);
    }

    std::int64_t vocab_size() const override { return model_->config().vocab_size; }

private:
    const DecoderModel* model_;
    MemoryT<float> memory_;
    MethodStateT<float> mstate_;
    std::vector<float> dist_;
};

int argmax_lowest(const std::vector<float>& dist) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(dist.size()); ++i)
        if (dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(best)]) best = i;
    return best;
}

// Word-boundary bookkeeping shared by greedy and beam decoding.
struct WordTracker {
    bool char_level;
    int space_id = -1;
    bool completing_prompt_word = false;  // prompt ended mid-word
    std::vector<std::string> words;
    std::string current;
    std::vector<double> word_probs;
    double current_prob = 1.0;

    void init(const Vocabulary& vocab, const std::vector<int>& prompt) {
        char_level = vocab.granularity() == Granularity::character;
        if (char_level) {
            space_id = vocab.space_id();
            completing_prompt_word = !prompt.empty() && prompt.back() != space_id;
        }
    }

    // Returns true when the token completed a word.
    bool push(const Vocabulary& vocab, int token, double prob) {
        if (!char_level) {
            words.push_back(vocab.token(token));
            word_probs.push_back(prob);
            return true;
        }
        if (token == space_id) {
            current_prob *= prob;
            if (completing_prompt_word) {
                completing_prompt_word = false;  // closed the prompt's word
                current_prob = 1.0;
                return false;
            }
            if (!current.empty()) {
                words.push_back(current);
                word_probs.push_back(current_prob);
                current.clear();
                current_prob = 1.0;
                return true;
            }
            current_prob = 1.0;
            return false;
        }
        if (completing_prompt_word) return false;  // still finishing the prompt's word
        if (!vocab.is_special(token)) current += vocab.token(token);
        current_prob *= prob;
        return false;
    }

    // Partial word flushed when the token budget runs out.
    void flush_partial() {
        if (char_level && !completing_prompt_word && !current.empty()) {
            words.push_back(current);
            word_probs.push_back(current_prob);
            current.clear();
        }
    }
};

}  // namespace

std::unique_ptr<LmSession> make_session(const DecoderModel& model) {
    return std::make_unique<DecoderSession>(model);
}

void prompt_feed(LmSession& session, const std::vector<int>& prompt_tokens) {
    if (prompt_tokens.empty()) throw std::invalid_argument("prompt_feed: empty prompt");
    session.feed(prompt_tokens);
}

const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::word_count: return "word_count";
        case StopReason::max_tokens: return "max_tokens";
        case StopReason::eos: return "eos";
    }
    return "?";
}

std::int64_t default_max_tokens(Granularity g, int k_words) {
    return g == Granularity::character ? 15 * static_cast<std::int64_t>(k_words) : k_words;
}

Suggestion greedy_suggest(LmSession& session, const Vocabulary& vocab,
                          const std::vector<int>& prompt_tokens, int k_words,
                          std::int64_t max_tokens) {
    if (k_words < 1) throw std::invalid_argument("greedy_suggest: k_words must be >= 1");
    if (max_tokens < 0) max_tokens = default_max_tokens(vocab.granularity(), k_words);
    prompt_feed(session, prompt_tokens);

    Suggestion s;
    WordTracker tracker;
    tracker.init(vocab, prompt_tokens);
    while (static_cast<std::int64_t>(s.raw_tokens.size()) < max_tokens) {
        const auto& dist = session.dist();
        const int tok = argmax_lowest(dist);
        const double p = dist[static_cast<std::size_t>(tok)];
        s.raw_tokens.push_back(tok);
        s.token_probs.push_back(p);
        if (tok == vocab.eos_id()) {
            tracker.flush_partial();
            s.words = tracker.words;
            s.word_probs = tracker.word_probs;
            s.stopped_by = StopReason::eos;
            return s;
        }
        tracker.push(vocab, tok, p);
        if (static_cast<int>(tracker.words.size()) >= k_words) {
            s.words = tracker.words;
            s.word_probs = tracker.word_probs;
            s.stopped_by = StopReason::word_count;
            return s;
        }
        session.feed({tok});
    }
    tracker.flush_partial();
    s.words = tracker.words;
    s.word_probs = tracker.word_probs;
    s.stopped_by = StopReason::max_tokens;
    return s;
}

namespace {

struct Hypothesis {
    std::unique_ptr<LmSession> session;  // state after feeding raw_tokens
    std::vector<int> raw_tokens;
    std::vector<double> token_probs;
    double logprob = 0.0;
    WordTracker tracker;
    bool finished = false;
    StopReason reason = StopReason::max_tokens;

    double score() const {
        return raw_tokens.empty() ? 0.0
                                  : logprob / static_cast<double>(raw_tokens.size());
    }
};

Suggestion to_suggestion(const Hypothesis& h) {
    Suggestion s;
    s.raw_tokens = h.raw_tokens;
    s.token_probs = h.token_probs;
    s.words = h.tracker.words;
    s.word_probs = h.tracker.word_probs;
    s.stopped_by = h.reason;
    return s;
}

}  // namespace

Suggestion beam_suggest(LmSession& session, const Vocabulary& vocab,
                        const std::vector<int>& prompt_tokens, int k_words, int beam_size,
                        std::int64_t max_tokens) {
    if (beam_size < 1) throw std::invalid_argument("beam_suggest: beam_size must be >= 1");
    if (k_words < 1) throw std::invalid_argument("beam_suggest: k_words must be >= 1");
    if (max_tokens < 0) max_tokens = default_max_tokens(vocab.granularity(), k_words);
    prompt_feed(session, prompt_tokens);

    std::vector<Hypothesis> alive(1);
    alive[0].session = session.clone();
    alive[0].tracker.init(vocab, prompt_tokens);
    std::vector<Hypothesis> finished;

    for (std::int64_t step = 0; step < max_tokens && !alive.empty(); ++step) {
        struct Cand {
            std::size_t hyp;
            int tok;
            double logp_total;
        };
        std::vector<Cand> cands;
        for (std::size_t hi = 0; hi < alive.size(); ++hi) {
            const auto& dist = alive[hi].session->dist();
            // Top beam_size expansions per hypothesis suffice: the pool is
            // pruned to beam_size overall.
            std::vector<int> idx(dist.size());
            for (std::size_t i = 0; i < dist.size(); ++i) idx[i] = static_cast<int>(i);
            const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(beam_size),
                                                          idx.size());
            std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(top),
                              idx.end(), [&](int a, int b) {
                                  const float pa = dist[static_cast<std::size_t>(a)];
                                  const float pb = dist[static_cast<std::size_t>(b)];
                                  if (pa != pb) return pa > pb;
                                  return a < b;  // tie toward the lowest id
                              });
            for (std::size_t j = 0; j < top; ++j) {
                const int tok = idx[j];
                const double p =
                    std::max(static_cast<double>(dist[static_cast<std::size_t>(tok)]), 1e-12);
                cands.push_back({hi, tok, alive[hi].logprob + std::log(p)});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.logp_total != b.logp_total) return a.logp_total > b.logp_total;
            if (a.tok != b.tok) return a.tok < b.tok;
            return a.hyp < b.hyp;
        });

        std::vector<Hypothesis> next;
        for (const Cand& c : cands) {
            if (static_cast<int>(next.size()) >= beam_size) break;
            Hypothesis h;
            h.session = alive[c.hyp].session->clone();
            h.raw_tokens = alive[c.hyp].raw_tokens;
            h.token_probs = alive[c.hyp].token_probs;
            h.tracker = alive[c.hyp].tracker;
            h.logprob = c.logp_total;
            const double p = std::exp(c.logp_total - alive[c.hyp].logprob);
            h.raw_tokens.push_back(c.tok);
            h.token_probs.push_back(p);
            if (c.tok == vocab.eos_id()) {
                h.tracker.flush_partial();
                h.finished = true;
                h.reason = StopReason::eos;
            } else {
                h.tracker.push(vocab, c.tok, p);
                if (static_cast<int>(h.tracker.words.size()) >= k_words) {
                    h.finished = true;
                    h.reason = StopReason::word_count;
                }
            }
            if (h.finished) {
                finished.push_back(std::move(h));
            } else {
                h.session->feed({h.raw_tokens.back()});
                next.push_back(std::move(h));
            }
        }
        if (static_cast<int>(finished.size()) >= beam_size) break;
        alive = std::move(next);
    }

    if (finished.empty()) {
        // Token budget ran out everywhere: return the best partial.
        for (auto& h : alive) {
            h.tracker.flush_partial();
            h.reason = StopReason::max_tokens;
            finished.push_back(std::move(h));
        }
    }
    if (finished.empty()) throw std::logic_error("beam_suggest: no hypotheses");
    const Hypothesis* best = &finished[0];
    for (const auto& h : finished) {
        if (h.score() > best->score() ||
            (h.score() == best->score() && h.raw_tokens < best->raw_tokens))
            best = &h;
    }
    return to_suggestion(*best);
}

Suggestion greedy_suggest(const DecoderModel& model, const Vocabulary& vocab,
                          const std::vector<int>& prompt_tokens, int k_words,
                          std::int64_t max_tokens) {
    auto session = make_session(model);
    return greedy_suggest(*session, vocab, prompt_tokens, k_words, max_tokens);
}

Suggestion beam_suggest(const DecoderModel& model, const Vocabulary& vocab,
                        const std::vector<int>& prompt_tokens, int k_words, int beam_size,
                        std::int64_t max_tokens) {
    auto session = make_session(model);
    return beam_suggest(*session, vocab, prompt_tokens, k_words, beam_size, max_tokens);
}

std::pair<double, std::int64_t> continuation_nll(LmSession& session,
                                                 const std::vector<int>& continuation) {
    double nll = 0.0;
    for (int tok : continuation) {
        const auto& dist = session.dist();
        const double p =
            std::max(static_cast<double>(dist[static_cast<std::size_t>(tok)]), 1e-9);
        nll -= std::log(p);
        session.feed({tok});
    }
    return {nll, static_cast<std::int64_t>(continuation.size())};
}

void suggest_repl(const DecoderModel& model, const Vocabulary& vocab, int k_words, bool beam,
                  int beam_size, std::istream& in, std::ostream& out) {
    std::string line;
    out << "prompt> " << std::flush;
    while (std::getline(in, line)) {
        const std::vector<int> prompt = vocab.encode(line);
        if (prompt.empty()) {
            out << "(empty prompt)\nprompt> " << std::flush;
            continue;
        }
        Suggestion s;
        auto session = make_session(model);
        if (beam)
            s = beam_suggest(*session, vocab, prompt, k_words, beam_size);
        else
            s = greedy_suggest(*session, vocab, prompt, k_words);
        out << "suggestion:";
        for (std::size_t i = 0; i < s.words.size(); ++i) {
            out << ' ' << s.words[i];
            if (i < s.word_probs.size()) out << " (p=" << s.word_probs[i] << ")";
        }
        out << "\nstopped_by: " << stop_reason_name(s.stopped_by) << "\nprompt> " << std::flush;
    }
    out << "\n";
}

}  // namespace ac
