#include "ac/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nlohmann/json.hpp"

#include "ac/analysis.hpp"
#include "ac/checkpoint.hpp"
#include "ac/eval.hpp"
#include "ac/io.hpp"
#include "ac/training.hpp"

namespace fs = std::filesystem;

namespace ac {

namespace {

struct PresetParams {
    // shared Transformer shape (keeps layer transfer well defined)
    std::int64_t n_head, d_head, d_model, d_inner;
    std::int64_t word_layers, word_deep_layers;
    std::int64_t tgt_len, mem_len, batch;
    std::int64_t steps, warmup;
    std::int64_t word_vocab_cap;
    double char_lr, word_lr;
    int eval_prompts, sweep_prompts;
    std::vector<double> sweep_percents;
    int transfer_percent;
};

PresetParams params_for(PipelinePreset p) {
    PresetParams pp;
    if (p == PipelinePreset::smoke) {
        pp = {2, 16, 32, 64, 2, 4, 48, 48, 8, 120, 40, 800, 1e-3, 1e-2,
              48, 24, {0.2, 0.5, 0.8}, 20};
    } else {
        pp = {4, 16, 64, 128, 3, 6, 96, 96, 12, 600, 150, 4000, 1e-3, 1e-2,
              150, 60, {0.2, 0.35, 0.5, 0.65, 0.8}, 20};
    }
    return pp;
}

struct VariantSpec {
    std::string name;
    Granularity granularity;
    Method method;
    bool transfer = false;
    bool transfer_source = false;
};

struct TrainedVariant {
    std::string name;
    ModelConfig cfg;
    std::int64_t param_count = 0;
    std::int64_t added_params = 0;
    double first10_loss = 0.0, last10_loss = 0.0, final_loss = 0.0;
    std::string checkpoint_path;
    MetricSummary summary;
};

double mean_first(const std::vector<StepStat>& t, std::size_t n) {
    double s = 0;
    const std::size_t m = std::min(n, t.size());
    for (std::size_t i = 0; i < m; ++i) s += t[i].loss;
    return s / static_cast<double>(m);
}

double mean_last(const std::vector<StepStat>& t, std::size_t n) {
    double s = 0;
    const std::size_t m = std::min(n, t.size());
    for (std::size_t i = 0; i < m; ++i) s += t[t.size() - 1 - i].loss;
    return s / static_cast<double>(m);
}

}  // namespace

std::string run_pipeline(const PipelineOptions& opts) {
    auto stage = [](const std::string& name, auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw std::runtime_error("pipeline stage '" + name + "' failed: " + e.what());
        }
    };
    const PresetParams pp = params_for(opts.preset);
    std::ostream* log = opts.progress;

    fs::create_directories(opts.out_dir);
    const std::string corpus = stage("load corpus", [&] { return read_text_file(opts.corpus_path); });

    // Hold out the last tenth of paragraphs for evaluation.
    const auto paras = split_paragraphs(corpus);
    if (paras.size() < 20)
        throw std::runtime_error("pipeline stage 'split corpus' failed: need >= 20 paragraphs");
    const std::size_t split = paras.size() - paras.size() / 10;
    std::string train_text, eval_text;
    for (std::size_t i = 0; i < paras.size(); ++i) {
        ((i < split) ? train_text : eval_text) += paras[i] + "\n\n";
    }

    const Vocabulary char_vocab = Vocabulary::build(train_text, Granularity::character);
    const Vocabulary word_vocab =
        Vocabulary::build(train_text, Granularity::word, pp.word_vocab_cap);

    auto base_config = [&](Granularity g, std::int64_t layers) {
        ModelConfig c;
        c.n_layer = layers;
        c.n_head = pp.n_head;
        c.d_head = pp.d_head;
        c.d_model = pp.d_model;
        c.d_embed = pp.d_model;
        c.d_inner = pp.d_inner;
        c.tgt_len = pp.tgt_len;
        c.mem_len = pp.mem_len;
        c.eval_mem_len = 2 * pp.mem_len;
        c.granularity = g;
        c.vocab_size = g == Granularity::word ? word_vocab.size() : char_vocab.size();
        c.max_words_per_seq = pp.tgt_len;  // worst case: every character a space
        c.dropout = 0.0;                   // desk scale: determinism over regularization
        if (g == Granularity::character) c.space_token_id = char_vocab.space_id();
        return c;
    };

    // Match the character budget to the word baseline by layer count.
    const ModelConfig word_cfg = base_config(Granularity::word, pp.word_layers);
    const std::int64_t word_total = count_params(word_cfg).total();
    std::int64_t best_layers = 1;
    std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
    for (std::int64_t l = 1; l <= 16; ++l) {
        const std::int64_t t = count_params(base_config(Granularity::character, l)).total();
        const std::int64_t gap = std::abs(t - word_total);
        if (gap < best_gap) {
            best_gap = gap;
            best_layers = l;
        }
    }
    const std::int64_t char_layers = best_layers;
    const double budget_gap_pct =
        100.0 * static_cast<double>(best_gap) / static_cast<double>(word_total);

    const std::vector<VariantSpec> variants = {
        {"word_base", Granularity::word, Method::baseline},
        {"word_deep", Granularity::word, Method::baseline, false, true},
        {"char_base", Granularity::character, Method::baseline},
        {"char_wordseg", Granularity::character, Method::word_segment},
        {"char_pool_sum", Granularity::character, Method::char_pool_sum},
        {"char_pool_mean", Granularity::character, Method::char_pool_mean},
        {"char_pool_max", Granularity::character, Method::char_pool_max},
        {"char_transfer", Granularity::character, Method::baseline, true},
    };

    const std::vector<std::int32_t> char_tokens = [&] {
        auto v = char_vocab.encode(train_text);
        return std::vector<std::int32_t>(v.begin(), v.end());
    }();
    const std::vector<std::int32_t> word_tokens = [&] {
        auto v = word_vocab.encode(train_text);
        return std::vector<std::int32_t>(v.begin(), v.end());
    }();

    std::vector<TrainedVariant> trained;
    nlohmann::json summary;
    summary["preset"] = opts.preset == PipelinePreset::smoke ? "smoke" : "desk";
    summary["seed"] = opts.seed;
    summary["word_vocab_size"] = word_vocab.size();
    summary["char_vocab_size"] = char_vocab.size();
    summary["word_total_params"] = word_total;
    summary["char_layers"] = char_layers;
    summary["budget_gap_percent"] = budget_gap_pct;
    summary["budget_matched_within_2pct"] = budget_gap_pct <= 2.0;

    std::string word_deep_ckpt;
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        const VariantSpec& spec = variants[vi];
        stage(spec.name, [&]() -> int {
            ModelConfig cfg = spec.granularity == Granularity::word
                                  ? base_config(Granularity::word, spec.transfer_source
                                                                       ? pp.word_deep_layers
                                                                       : pp.word_layers)
                                  : base_config(Granularity::character, char_layers);
            cfg.method = spec.method;
            const Vocabulary& vocab =
                spec.granularity == Granularity::word ? word_vocab : char_vocab;

            Rng init_rng(opts.seed + 1000 * (vi + 1));
            DecoderModel model(cfg, init_rng);

            nlohmann::json vj;
            if (spec.transfer) {
                if (word_deep_ckpt.empty())
                    throw std::runtime_error("transfer source checkpoint missing");
                LoadedModel source = load_checkpoint(word_deep_ckpt);
                TransferPlan plan = make_transfer_plan(source.model.config(), cfg,
                                                       pp.transfer_percent, word_deep_ckpt);
                transfer_layers(model, source.model, plan);
                // initialization check: mapped layers must equal the source bitwise
                for (const auto& [s, t] : plan.mapped_layers) {
                    const std::string sn = "layers." + std::to_string(s) + ".attn.qkv_w";
                    const std::string tn = "layers." + std::to_string(t) + ".attn.qkv_w";
                    if (source.model.param(sn).val().v != model.param(tn).val().v)
                        throw std::runtime_error("transfer initialization check failed");
                }
                vj["transfer_plan"] = plan.to_json();
                write_text_file((fs::path(opts.out_dir) / (spec.name + ".transfer.json")).string(),
                                plan.to_json().dump(2));
            }

            TrainConfig tc;
            tc.learning_rate = spec.granularity == Granularity::word ? pp.word_lr : pp.char_lr;
            tc.warmup_steps = pp.warmup;
            tc.max_steps = pp.steps;
            tc.batch_size = pp.batch;
            tc.tgt_len = pp.tgt_len;
            tc.mem_len = pp.mem_len;
            tc.seed = opts.seed + 17 * (vi + 1);
            tc.eval_interval = std::max<std::int64_t>(1, pp.steps / 4);
            if (log) (*log) << "[pipeline] training " << spec.name << "\n";
            const auto& tokens =
                spec.granularity == Granularity::word ? word_tokens : char_tokens;
            TrainResult tr = train(model, tokens, tc, nullptr);

            TrainedVariant out;
            out.name = spec.name;
            out.cfg = cfg;
            out.param_count = model.total_params();
            out.added_params =
                spec.method == Method::word_segment ? cfg.max_words_per_seq * cfg.d_embed : 0;
            out.first10_loss = mean_first(tr.trace, 10);
            out.last10_loss = mean_last(tr.trace, 10);
            out.final_loss = tr.final_loss;
            out.checkpoint_path =
                (fs::path(opts.out_dir) / (spec.name + ".ckpt")).string();
            save_checkpoint(model, vocab, out.checkpoint_path);
            {
                std::ofstream tf(fs::path(opts.out_dir) / (spec.name + ".loss_trace.csv"));
                write_loss_trace_csv(tf, tr.trace);
            }
            if (spec.transfer_source) word_deep_ckpt = out.checkpoint_path;

            // held-out evaluation at the default context percent
            auto prompts = make_prompts(eval_text, 0.2, 3, vocab);
            if (static_cast<int>(prompts.size()) > pp.eval_prompts)
                prompts.resize(static_cast<std::size_t>(pp.eval_prompts));
            if (prompts.empty())
                throw std::runtime_error("no evaluation prompts from held-out text");
            EvalOptions eo;
            eo.k_words = 3;
            eo.threads = 2;
            const auto records = evaluate_prompts(model, vocab, prompts, eo);
            out.summary = summarize(records, 3);
            {
                std::ofstream rf(fs::path(opts.out_dir) / (spec.name + ".records.csv"));
                write_records_csv(rf, records, 3);
            }
            trained.push_back(std::move(out));
            return 0;
        });
    }

    // Table-2-shaped comparison.
    {
        std::ostringstream t2;
        t2 << "model,granularity,method,params,added_params,em_overall,pm_overall,"
              "first10_loss,last10_loss,loss_decreased\n";
        for (const auto& v : trained) {
            t2 << v.name << ',' << granularity_name(v.cfg.granularity) << ','
               << method_name(v.cfg.method) << ',' << v.param_count << ',' << v.added_params
               << ',' << v.summary.em_overall << ',' << v.summary.pm_overall << ','
               << v.first10_loss << ',' << v.last10_loss << ','
               << (v.last10_loss < v.first10_loss ? 1 : 0) << '\n';
        }
        write_text_file((fs::path(opts.out_dir) / "table2.csv").string(), t2.str());
    }

    // Context sweep (smaller prompt set per percent).
    stage("context sweep", [&]() -> int {
        std::ostringstream cs;
        cs << "model,context_percent,em_overall,pm_overall,n_prompts\n";
        for (const auto& v : trained) {
            if (v.name == "word_deep") continue;
            LoadedModel lm = load_checkpoint(v.checkpoint_path);
            for (double cp : pp.sweep_percents) {
                auto prompts = make_prompts(eval_text, cp, 3, lm.vocab);
                if (static_cast<int>(prompts.size()) > pp.sweep_prompts)
                    prompts.resize(static_cast<std::size_t>(pp.sweep_prompts));
                if (prompts.empty()) continue;
                EvalOptions eo;
                eo.k_words = 3;
                eo.threads = 2;
                const auto records = evaluate_prompts(lm.model, lm.vocab, prompts, eo);
                const auto s = summarize(records, 3);
                cs << v.name << ',' << cp << ',' << s.em_overall << ',' << s.pm_overall << ','
                   << s.n_prompts << '\n';
            }
        }
        write_text_file((fs::path(opts.out_dir) / "context_sweep.csv").string(), cs.str());
        return 0;
    });

    // Greedy vs beam (beam 5, context 20%) on the two baselines.
    stage("greedy vs beam", [&]() -> int {
        std::ostringstream gb;
        gb << "model,decoder,em_overall,pm_overall,n_prompts\n";
        for (const auto& v : trained) {
            if (v.name != "word_base" && v.name != "char_base") continue;
            LoadedModel lm = load_checkpoint(v.checkpoint_path);
            auto prompts = make_prompts(eval_text, 0.2, 3, lm.vocab);
            if (static_cast<int>(prompts.size()) > pp.sweep_prompts)
                prompts.resize(static_cast<std::size_t>(pp.sweep_prompts));
            for (bool beam : {false, true}) {
                EvalOptions eo;
                eo.k_words = 3;
                eo.beam = beam;
                eo.beam_size = 5;
                eo.threads = 2;
                const auto records = evaluate_prompts(lm.model, lm.vocab, prompts, eo);
                const auto s = summarize(records, 3);
                gb << v.name << ',' << (beam ? "beam5" : "greedy") << ',' << s.em_overall << ','
                   << s.pm_overall << ',' << s.n_prompts << '\n';
            }
        }
        write_text_file((fs::path(opts.out_dir) / "greedy_vs_beam.csv").string(), gb.str());
        return 0;
    });

    // Accuracy-memory pareto data over the trained set.
    {
        std::vector<ParetoEntry> entries;
        for (const auto& v : trained) {
            ParetoEntry e;
            e.label = v.name;
            e.param_count = v.param_count;
            e.memory_bytes =
                estimate_peak_memory(v.cfg, 1, v.cfg.tgt_len, MemoryMode::inference)
                    .total_peak_bytes;
            e.em_overall = v.summary.em_overall;
            entries.push_back(e);
        }
        std::ostringstream ps;
        write_pareto_csv(ps, pareto_table(std::move(entries)));
        write_text_file((fs::path(opts.out_dir) / "pareto.csv").string(), ps.str());
    }

    nlohmann::json models = nlohmann::json::array();
    for (const auto& v : trained) {
        nlohmann::json m;
        m["name"] = v.name;
        m["granularity"] = granularity_name(v.cfg.granularity);
        m["method"] = method_name(v.cfg.method);
        m["n_layer"] = v.cfg.n_layer;
        m["params"] = v.param_count;
        m["added_params"] = v.added_params;
        m["em_overall"] = v.summary.em_overall;
        m["pm_overall"] = v.summary.pm_overall;
        m["nll_per_token"] = v.summary.nll_per_token;
        m["perplexity"] = v.summary.perplexity;
        m["first10_loss"] = v.first10_loss;
        m["last10_loss"] = v.last10_loss;
        m["loss_decreased"] = v.last10_loss < v.first10_loss;
        m["checkpoint"] = v.checkpoint_path;
        models.push_back(m);
    }
    summary["models"] = models;
    summary["metric_weighting"] = "EM@Overall weight(n) = n, n = 1..3";
    write_text_file((fs::path(opts.out_dir) / "summary.json").string(), summary.dump(2));
    return opts.out_dir;
}

}  // namespace ac
