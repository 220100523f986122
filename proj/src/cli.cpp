#include "ac/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "ac/analysis.hpp"
#include "ac/checkpoint.hpp"
#include "ac/eval.hpp"
#include "ac/io.hpp"
#include "ac/kernels.hpp"
#include "ac/pipeline.hpp"
#include "ac/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ac {

namespace {

std::string default_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("ACLM_OUT_DIR")) return env;
    return "aclm_out";
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::runtime_error("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_model_section(const json& j, ModelConfig& mc) {
    reject_unknown_keys(j, {"n_layer", "n_head", "d_head", "d_model", "d_embed", "d_inner",
                            "tgt_len", "mem_len", "eval_mem_len", "tie_weights", "method",
                            "max_words_per_seq", "dropout", "adaptive", "adaptive_cutoffs",
                            "adaptive_div"},
                        "model");
    maybe(j, "n_layer", mc.n_layer);
    maybe(j, "n_head", mc.n_head);
    maybe(j, "d_head", mc.d_head);
    maybe(j, "d_model", mc.d_model);
    maybe(j, "d_embed", mc.d_embed);
    maybe(j, "d_inner", mc.d_inner);
    maybe(j, "tgt_len", mc.tgt_len);
    maybe(j, "mem_len", mc.mem_len);
    maybe(j, "eval_mem_len", mc.eval_mem_len);
    maybe(j, "tie_weights", mc.tie_weights);
    if (j.contains("method")) mc.method = method_from_name(j.at("method").get<std::string>());
    maybe(j, "max_words_per_seq", mc.max_words_per_seq);
    maybe(j, "dropout", mc.dropout);
    maybe(j, "adaptive", mc.adaptive);
    maybe(j, "adaptive_cutoffs", mc.adaptive_cutoffs);
    maybe(j, "adaptive_div", mc.adaptive_div);
}

void apply_train_section(const json& j, TrainConfig& tc) {
    reject_unknown_keys(j, {"learning_rate", "warmup_steps", "max_steps", "batch_size",
                            "tgt_len", "mem_len", "seed", "eval_interval", "clip_norm"},
                        "train");
    maybe(j, "learning_rate", tc.learning_rate);
    maybe(j, "warmup_steps", tc.warmup_steps);
    maybe(j, "max_steps", tc.max_steps);
    maybe(j, "batch_size", tc.batch_size);
    maybe(j, "tgt_len", tc.tgt_len);
    maybe(j, "mem_len", tc.mem_len);
    maybe(j, "seed", tc.seed);
    maybe(j, "eval_interval", tc.eval_interval);
    maybe(j, "clip_norm", tc.clip_norm);
}

int cmd_build_vocab(const std::string& corpus_path, const std::string& granularity,
                    std::int64_t max_size, const std::string& out_path) {
    const std::string text = read_text_file(corpus_path);
    const auto g = granularity_from_name(granularity);
    Vocabulary v = Vocabulary::build(
        text, g, max_size > 0 ? std::optional<std::int64_t>(max_size) : std::nullopt);
    json j = v.to_json();
    j["size"] = v.size();
    write_text_file(out_path, j.dump(2));
    std::cout << "vocabulary: " << v.size() << " ids (" << granularity_name(g) << ") -> "
              << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& config_path,
              const std::string& granularity, std::string out_dir, const json& flag_overrides) {
    out_dir = default_out_dir(out_dir);
    fs::create_directories(out_dir);
    ModelConfig mc;
    TrainConfig tc;
    Granularity g = granularity_from_name(granularity);
    std::int64_t vocab_cap = 0;

    json file_cfg = json::object();
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw std::runtime_error("config not found: " + config_path);
        is >> file_cfg;
        reject_unknown_keys(file_cfg, {"model", "train", "vocab"}, "top level");
        if (file_cfg.contains("model")) apply_model_section(file_cfg.at("model"), mc);
        if (file_cfg.contains("train")) apply_train_section(file_cfg.at("train"), tc);
        if (file_cfg.contains("vocab")) {
            reject_unknown_keys(file_cfg.at("vocab"), {"granularity", "max_size"}, "vocab");
            if (file_cfg.at("vocab").contains("granularity"))
                g = granularity_from_name(file_cfg.at("vocab").at("granularity"));
            maybe(file_cfg.at("vocab"), "max_size", vocab_cap);
        }
    }
    if (flag_overrides.contains("model")) apply_model_section(flag_overrides.at("model"), mc);
    if (flag_overrides.contains("train")) apply_train_section(flag_overrides.at("train"), tc);

    // model and trainer agree on the segment geometry
    mc.tgt_len = tc.tgt_len;
    mc.mem_len = tc.mem_len;
    mc.eval_mem_len = std::max(mc.eval_mem_len, tc.mem_len);
    mc.granularity = g;

    const std::string text = read_text_file(corpus_path);
    Vocabulary vocab = Vocabulary::build(
        text, g, vocab_cap > 0 ? std::optional<std::int64_t>(vocab_cap) : std::nullopt);
    mc.vocab_size = vocab.size();
    if (g == Granularity::character) mc.space_token_id = vocab.space_id();
    mc.validate();
    tc.validate();

    json effective;
    effective["model"] = mc.to_json();
    effective["train"] = tc.to_json();
    effective["vocab"] = {{"granularity", granularity_name(g)}, {"max_size", vocab_cap}};
    effective["corpus"] = corpus_path;
    effective["kernels"] = kern::backend_name(kern::active());
    write_text_file((fs::path(out_dir) / "effective_config.json").string(), effective.dump(2));
    std::cout << effective.dump() << "\n";

    Rng rng(tc.seed);
    DecoderModel model(mc, rng);
    std::cout << "training " << model.total_params() << " parameters on "
              << text.size() << " bytes of corpus\n";
    const auto ids = vocab.encode(text);
    TrainResult tr = train(model, std::vector<std::int32_t>(ids.begin(), ids.end()), tc,
                           &std::cout);
    {
        std::ofstream tf(fs::path(out_dir) / "loss_trace.csv");
        write_loss_trace_csv(tf, tr.trace);
    }
    const std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
    save_checkpoint(model, vocab, ckpt);
    std::cout << "final loss " << tr.final_loss << "; checkpoint -> " << ckpt << "\n";
    return 0;
}

std::vector<double> parse_sweep(const std::string& spec) {
    // "a:b:step"
    double a, b, s;
    char c1, c2;
    std::istringstream is(spec);
    if (!(is >> a >> c1 >> b >> c2 >> s) || c1 != ':' || c2 != ':' || s <= 0)
        throw std::runtime_error("bad --context-sweep spec (want a:b:step): " + spec);
    std::vector<double> out;
    for (double x = a; x <= b + 1e-9; x += s) out.push_back(x);
    return out;
}

int cmd_eval(const std::string& ckpt_path, const std::string& corpus_path, std::string out_dir,
             double context_percent, int k_words, const std::string& decoder, int beam_size,
             int threads, const std::string& train_corpus, const std::string& sweep_spec,
             std::int64_t max_prompts) {
    out_dir = default_out_dir(out_dir);
    fs::create_directories(out_dir);
    LoadedModel lm = load_checkpoint(ckpt_path);
    const std::string text = read_text_file(corpus_path);

    EvalOptions eo;
    eo.k_words = k_words;
    eo.beam = decoder == "beam";
    eo.beam_size = beam_size;
    eo.threads = threads;

    auto build_prompts = [&](double cp) {
        auto prompts = make_prompts(text, cp, k_words, lm.vocab);
        if (max_prompts > 0 && static_cast<std::int64_t>(prompts.size()) > max_prompts)
            prompts.resize(static_cast<std::size_t>(max_prompts));
        return prompts;
    };

    auto prompts = build_prompts(context_percent);
    if (prompts.empty()) throw std::runtime_error("no qualifying prompts in " + corpus_path);

    std::unique_ptr<NgramIndex> train_index;
    if (!train_corpus.empty()) {
        train_index = std::make_unique<NgramIndex>(read_text_file(train_corpus), 3);
        score_prompt_oov(prompts, *train_index);
    }

    const auto records = evaluate_prompts(lm.model, lm.vocab, prompts, eo);
    MetricSummary summary = summarize(records, k_words);
    {
        std::ofstream rf(fs::path(out_dir) / "records.csv");
        write_records_csv(rf, records, k_words);
    }
    {
        std::ostringstream en;
        en << "n,em_at_n\n";
        const auto curve = em_vs_n_curve(records, k_words);
        for (int n = 1; n <= k_words; ++n) en << n << ',' << curve[n - 1] << '\n';
        write_text_file((fs::path(out_dir) / "em_vs_n.csv").string(), en.str());
    }
    if (train_index) {
        std::ostringstream cc;
        cc << "order,cutoff,used,em_at_1\n";
        for (auto order : {CutoffOrder::ascending, CutoffOrder::descending}) {
            const auto curve = cutoff_curve(records, {100, 250, 500}, order, &std::cerr);
            for (const auto& p : curve)
                cc << (order == CutoffOrder::ascending ? "ascending" : "descending") << ','
                   << p.cutoff << ',' << p.used << ',' << p.em_at_1 << '\n';
        }
        write_text_file((fs::path(out_dir) / "cutoff_curve.csv").string(), cc.str());
    }
    if (!sweep_spec.empty()) {
        std::ostringstream cs;
        cs << "context_percent,em_overall,pm_overall,n_prompts\n";
        for (double cp : parse_sweep(sweep_spec)) {
            auto sp = build_prompts(cp);
            if (sp.empty()) continue;
            const auto recs = evaluate_prompts(lm.model, lm.vocab, sp, eo);
            const auto s = summarize(recs, k_words);
            cs << cp << ',' << s.em_overall << ',' << s.pm_overall << ',' << s.n_prompts << '\n';
        }
        write_text_file((fs::path(out_dir) / "context_sweep.csv").string(), cs.str());
    }

    json effective;
    effective["checkpoint"] = ckpt_path;
    effective["corpus"] = corpus_path;
    effective["context_percent"] = context_percent;
    effective["k_words"] = k_words;
    effective["decoder"] = eo.beam ? "beam" : "greedy";
    effective["beam_size"] = beam_size;
    effective["threads"] = threads;
    effective["summary"] = summary.to_json();
    write_text_file((fs::path(out_dir) / "summary.json").string(), effective.dump(2));
    std::cout << "em_overall " << summary.em_overall << " pm_overall " << summary.pm_overall
              << " over " << summary.n_prompts << " prompts -> " << out_dir << "\n";
    return 0;
}

int cmd_analyze_params(std::int64_t n, std::uint64_t seed, const std::string& granularity,
                       const std::string& out_csv) {
    const ArchitectureSpace space;
    auto run_one = [&](Granularity g, const char* label) {
        const auto configs = sample_architectures(space, n, seed, g);
        const auto study = breakdown_study(configs);
        std::cout << label << " models (n=" << n << ", seed=" << seed << "): mean shares"
                  << " AdaEmb " << study.mean_share[0] << "% Attn " << study.mean_share[1]
                  << "% FFN " << study.mean_share[2] << "% Softmax " << study.mean_share[3]
                  << "%\n";
        if (!out_csv.empty()) {
            std::ofstream os(out_csv + (std::string(".") + label + ".csv"));
            write_breakdown_csv(os, configs, study);
        }
    };
    if (granularity == "word" || granularity == "both") run_one(Granularity::word, "word");
    if (granularity == "char" || granularity == "both") run_one(Granularity::character, "char");
    return 0;
}

int cmd_analyze_oov(const std::string& train_path, const std::string& test_path, int max_n,
                    const std::string& out_json) {
    const auto report = oov_ngram_report(read_text_file(train_path), read_text_file(test_path),
                                         max_n);
    json j;
    for (const auto& [n, pct] : report.per_n) {
        j["per_n"][std::to_string(n)] = pct;
        j["counts"][std::to_string(n)] = {{"oov", report.counts.at(n).first},
                                          {"unique", report.counts.at(n).second}};
        std::cout << n << "-gram OOV: " << pct << "% (" << report.counts.at(n).first << "/"
                  << report.counts.at(n).second << " unique)\n";
    }
    if (!out_json.empty()) write_text_file(out_json, j.dump(2));
    return 0;
}

int cmd_pareto(const std::string& input_csv, const std::string& out_csv) {
    std::ifstream is(input_csv);
    if (!is) throw std::runtime_error("cannot open " + input_csv);
    std::string line;
    std::vector<ParetoEntry> entries;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::istringstream ls(line);
        ParetoEntry e;
        std::string field;
        std::getline(ls, e.label, ',');
        std::getline(ls, field, ',');
        e.param_count = std::stoll(field);
        std::getline(ls, field, ',');
        e.memory_bytes = std::stoll(field);
        std::getline(ls, field, ',');
        e.em_overall = std::stod(field);
        entries.push_back(e);
    }
    const auto sorted = pareto_table(std::move(entries));
    std::ostringstream os;
    write_pareto_csv(os, sorted);
    if (out_csv.empty())
        std::cout << os.str();
    else
        write_text_file(out_csv, os.str());
    return 0;
}

int cmd_suggest(const std::string& ckpt_path, int k_words, const std::string& decoder,
                int beam_size) {
    LoadedModel lm = load_checkpoint(ckpt_path);
    suggest_repl(lm.model, lm.vocab, k_words, decoder == "beam", beam_size, std::cin, std::cout);
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"memory-aware autocomplete modeling toolkit"};
    app.require_subcommand(1);

    // build-vocab
    std::string bv_corpus, bv_granularity = "character", bv_out = "vocab.json";
    std::int64_t bv_max = 0;
    auto* bv = app.add_subcommand("build-vocab", "build a vocabulary from a corpus");
    bv->add_option("--corpus", bv_corpus, "corpus text file")->required();
    bv->add_option("--granularity", bv_granularity, "character|word");
    bv->add_option("--max-size", bv_max, "cap on total vocabulary size");
    bv->add_option("--out", bv_out, "output JSON path");

    // train
    std::string tr_corpus, tr_config, tr_granularity = "character", tr_out;
    json tr_over = json::object();
    std::int64_t tr_steps = -1, tr_batch = -1, tr_tgt = -1, tr_mem = -1, tr_warmup = -1;
    std::int64_t tr_layers = -1, tr_dmodel = -1, tr_dinner = -1, tr_heads = -1, tr_dhead = -1;
    double tr_lr = -1, tr_dropout = -1;
    std::int64_t tr_seed = -1;
    std::string tr_method;
    auto* tr = app.add_subcommand("train", "train a decoder on a corpus");
    tr->add_option("--corpus", tr_corpus, "corpus text file")->required();
    tr->add_option("--config", tr_config, "JSON config (model/train/vocab sections)");
    tr->add_option("--granularity", tr_granularity, "character|word");
    tr->add_option("--out", tr_out, "output directory (or ACLM_OUT_DIR)");
    tr->add_option("--steps", tr_steps, "max training steps");
    tr->add_option("--batch", tr_batch, "batch size");
    tr->add_option("--tgt-len", tr_tgt, "segment length");
    tr->add_option("--mem-len", tr_mem, "cached positions");
    tr->add_option("--warmup", tr_warmup, "warmup steps");
    tr->add_option("--lr", tr_lr, "peak learning rate");
    tr->add_option("--seed", tr_seed, "rng seed");
    tr->add_option("--dropout", tr_dropout, "dropout rate");
    tr->add_option("--layers", tr_layers, "decoder layers");
    tr->add_option("--d-model", tr_dmodel, "model width");
    tr->add_option("--d-inner", tr_dinner, "feedforward width");
    tr->add_option("--heads", tr_heads, "attention heads");
    tr->add_option("--d-head", tr_dhead, "attention head width");
    tr->add_option("--method", tr_method,
                   "baseline|word_segment|char_pool_sum|char_pool_mean|char_pool_max");

    // eval
    std::string ev_ckpt, ev_corpus, ev_out, ev_decoder = "greedy", ev_train_corpus, ev_sweep;
    double ev_cp = 0.2;
    int ev_k = 3, ev_beam = 5, ev_threads = 1;
    std::int64_t ev_max_prompts = 0;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--corpus", ev_corpus, "evaluation corpus")->required();
    ev->add_option("--out", ev_out, "output directory (or ACLM_OUT_DIR)");
    ev->add_option("--context-percent", ev_cp, "prompt share of each paragraph");
    ev->add_option("--k-words", ev_k, "ground-truth words per prompt");
    ev->add_option("--decoder", ev_decoder, "greedy|beam (default greedy)");
    ev->add_option("--beam-size", ev_beam, "beam width");
    ev->add_option("--threads", ev_threads, "evaluation threads");
    ev->add_option("--train-corpus", ev_train_corpus, "training text for OOV scores");
    ev->add_option("--context-sweep", ev_sweep, "a:b:step sweep of context percents");
    ev->add_option("--max-prompts", ev_max_prompts, "cap on prompt count");

    // suggest
    std::string sg_ckpt, sg_decoder = "greedy";
    int sg_k = 3, sg_beam = 5;
    auto* sg = app.add_subcommand("suggest", "interactive suggestion REPL");
    sg->add_option("--checkpoint", sg_ckpt, "checkpoint file")->required();
    sg->add_option("--k-words", sg_k, "words per suggestion");
    sg->add_option("--decoder", sg_decoder, "greedy|beam");
    sg->add_option("--beam-size", sg_beam, "beam width");

    // analyze-params
    std::int64_t ap_n = 100;
    std::uint64_t ap_seed = kBreakdownSeed;
    std::string ap_granularity = "both", ap_out;
    auto* ap = app.add_subcommand("analyze-params",
                                  "component parameter breakdown over sampled architectures");
    ap->add_option("--n", ap_n, "architectures to sample");
    ap->add_option("--seed", ap_seed, "sampling seed");
    ap->add_option("--granularity", ap_granularity, "word|char|both");
    ap->add_option("--out", ap_out, "CSV path prefix");

    // analyze-oov
    std::string ao_train, ao_test, ao_out;
    int ao_max_n = 3;
    auto* ao = app.add_subcommand("analyze-oov", "unique OOV n-gram percentages");
    ao->add_option("--train", ao_train, "training text")->required();
    ao->add_option("--test", ao_test, "test text")->required();
    ao->add_option("--max-n", ao_max_n, "largest n-gram order");
    ao->add_option("--out", ao_out, "JSON output path");

    // pareto
    std::string pt_in, pt_out;
    auto* pt = app.add_subcommand("pareto", "accuracy-memory pareto ordering");
    pt->add_option("--input", pt_in, "CSV: label,params,memory_bytes,em_overall")->required();
    pt->add_option("--out", pt_out, "output CSV (stdout when omitted)");

    // theory-table
    auto* tt = app.add_subcommand("theory-table",
                                  "exact-match vs NLL table for two-token distributions");

    // pipeline
    std::string pl_corpus, pl_out, pl_preset = "smoke";
    std::uint64_t pl_seed = 1;
    auto* pl = app.add_subcommand("pipeline", "desk-scale reproduction pipeline");
    pl->add_option("--corpus", pl_corpus, "corpus text file")->required();
    pl->add_option("--out", pl_out, "report directory (or ACLM_OUT_DIR)");
    pl->add_option("--preset", pl_preset, "smoke|desk");
    pl->add_option("--seed", pl_seed, "pipeline seed");

    try {
        app.parse(argc, argv);

        if (bv->parsed()) return cmd_build_vocab(bv_corpus, bv_granularity, bv_max, bv_out);
        if (tr->parsed()) {
            json model = json::object(), trainj = json::object();
            if (tr_steps >= 0) trainj["max_steps"] = tr_steps;
            if (tr_batch >= 0) trainj["batch_size"] = tr_batch;
            if (tr_tgt >= 0) trainj["tgt_len"] = tr_tgt;
            if (tr_mem >= 0) trainj["mem_len"] = tr_mem;
            if (tr_warmup >= 0) trainj["warmup_steps"] = tr_warmup;
            if (tr_lr >= 0) trainj["learning_rate"] = tr_lr;
            if (tr_seed >= 0) trainj["seed"] = tr_seed;
            if (tr_dropout >= 0) model["dropout"] = tr_dropout;
            if (tr_layers >= 0) model["n_layer"] = tr_layers;
            if (tr_dmodel >= 0) {
                model["d_model"] = tr_dmodel;
                model["d_embed"] = tr_dmodel;
            }
            if (tr_dinner >= 0) model["d_inner"] = tr_dinner;
            if (tr_heads >= 0) model["n_head"] = tr_heads;
            if (tr_dhead >= 0) model["d_head"] = tr_dhead;
            if (!tr_method.empty()) model["method"] = tr_method;
            tr_over["model"] = model;
            tr_over["train"] = trainj;
            return cmd_train(tr_corpus, tr_config, tr_granularity, tr_out, tr_over);
        }
        if (ev->parsed())
            return cmd_eval(ev_ckpt, ev_corpus, ev_out, ev_cp, ev_k, ev_decoder, ev_beam,
                            ev_threads, ev_train_corpus, ev_sweep, ev_max_prompts);
        if (sg->parsed()) return cmd_suggest(sg_ckpt, sg_k, sg_decoder, sg_beam);
        if (ap->parsed()) return cmd_analyze_params(ap_n, ap_seed, ap_granularity, ap_out);
        if (ao->parsed()) return cmd_analyze_oov(ao_train, ao_test, ao_max_n, ao_out);
        if (pt->parsed()) return cmd_pareto(pt_in, pt_out);
        if (tt->parsed()) {
            print_theory_table(std::cout);
            return 0;
        }
        if (pl->parsed()) {
            PipelineOptions po;
            po.preset = pl_preset == "desk" ? PipelinePreset::desk : PipelinePreset::smoke;
            po.corpus_path = pl_corpus;
            po.out_dir = default_out_dir(pl_out);
            po.seed = pl_seed;
            po.progress = &std::cout;
            const std::string dir = run_pipeline(po);
            std::cout << "report -> " << dir << "\n";
            return 0;
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ac
