#include "ac/eval.hpp"

#include <atomic>
#include <thread>

namespace ac {

namespace {

EvalRecord eval_one(const DecoderModel& model, const Vocabulary& vocab,
                    const PromptExample& prompt, const EvalOptions& opts) {
    Suggestion s;
    if (opts.beam)
        s = beam_suggest(model, vocab, prompt.prompt_tokens, opts.k_words, opts.beam_size,
                         opts.max_tokens);
    else
        s = greedy_suggest(model, vocab, prompt.prompt_tokens, opts.k_words, opts.max_tokens);

    EvalRecord r = score_prediction(s.words, prompt.ground_truth_words, opts.k_words);
    r.prompt_id = prompt.source_id;
    r.context_percent = prompt.context_percent;
    r.oov_score = prompt.oov_score;

    // Teacher-forced NLL of the ground truth continuation given the prompt.
    std::string truth_text;
    for (std::size_t i = 0; i < prompt.ground_truth_words.size(); ++i)
        truth_text += (i ? " " : "") + prompt.ground_truth_words[i];
    std::vector<int> cont = vocab.encode(
        vocab.granularity() == Granularity::character ? " " + truth_text : truth_text);
    auto session = make_session(model);
    prompt_feed(*session, prompt.prompt_tokens);
    auto [nll, toks] = continuation_nll(*session, cont);
    r.nll_nats = nll;
    r.nll_tokens = toks;
    return r;
}

}  // namespace

std::vector<EvalRecord> evaluate_prompts(const DecoderModel& model, const Vocabulary& vocab,
                                         const std::vector<PromptExample>& prompts,
                                         const EvalOptions& opts) {
    std::vector<EvalRecord> records(prompts.size());
    const int threads = std::max(1, opts.threads);
    if (threads == 1 || prompts.size() < 2) {
        for (std::size_t i = 0; i < prompts.size(); ++i)
            records[i] = eval_one(model, vocab, prompts[i], opts);
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= prompts.size()) return;
                records[i] = eval_one(model, vocab, prompts[i], opts);
            }
        });
    for (auto& th : pool) th.join();
    return records;
}

void score_prompt_oov(std::vector<PromptExample>& prompts, const NgramIndex& train_index,
                      int max_n) {
    for (auto& p : prompts)
        p.oov_score = oov_prompt_score(split_words(p.prompt_text), train_index, max_n);
}

}  // namespace ac
