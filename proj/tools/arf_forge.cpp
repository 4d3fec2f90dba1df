#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "arf/benchmark/commands.hpp"
#include "arf/benchmark/config.hpp"
#include "arf/benchmark/generate.hpp"
#include "arf/core/error.hpp"
#include "arf/core/time.hpp"
#include "arf/metrics.hpp"

namespace {

using namespace arf;

UnixSeconds resolve_created_at(const std::string& flag) {
    auto parse = [](const std::string& s) -> UnixSeconds {
        if (auto t = try_parse_rfc3339(s)) return *t;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError("created-at must be RFC 3339 or Unix seconds: " + s);
    };
    if (!flag.empty()) return parse(flag);
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) return parse(env);
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string sanitize(std::string s) {
    for (auto& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"arf-forge: anomaly-reasoning time-series QA benchmark forge and evaluation harness"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "synthesize series, answer keys and questions");
    std::string gen_config, gen_out, created_at;
    std::optional<std::uint64_t> gen_seed;
    std::optional<std::size_t> gen_total;
    gen->add_option("--config", gen_config, "benchmark config JSON");
    gen->add_option("--seed", gen_seed, "root seed (overrides the config)");
    gen->add_option("--questions", gen_total, "total questions, equal mix (overrides the config)");
    gen->add_option("--out", gen_out, "output directory (must be empty or absent)")->required();
    gen->add_option("--created-at", created_at, "manifest timestamp; defaults to SOURCE_DATE_EPOCH or now");

    auto* ren = app.add_subcommand("render", "render question images");
    std::string ren_dir;
    std::size_t ren_conc = 1;
    ren->add_option("--benchmark,--out", ren_dir, "benchmark directory")->required();
    ren->add_option("--concurrency", ren_conc, "worker threads");

    auto* ev = app.add_subcommand("eval", "evaluate a model or baseline");
    std::string ev_dir, ev_config, ev_model, ev_endpoint, ev_mode, ev_results;
    std::optional<std::uint64_t> ev_seed;
    std::optional<std::size_t> ev_conc;
    ev->add_option("--benchmark", ev_dir, "benchmark directory")->required();
    ev->add_option("--config", ev_config, "run config JSON");
    ev->add_option("--model", ev_model, "model name or baseline:random|frequent|oracle|zscore");
    ev->add_option("--endpoint", ev_endpoint, "chat-completions endpoint URL");
    ev->add_option("--mode", ev_mode, "vision or text");
    ev->add_option("--seed", ev_seed, "option-shuffle and baseline seed");
    ev->add_option("--concurrency", ev_conc, "concurrent requests");
    ev->add_option("--results,--out", ev_results, "results JSONL (default <benchmark>/results/<model>.jsonl)");

    auto* sc = app.add_subcommand("score", "score results against a benchmark");
    std::string sc_dir, sc_results, sc_out, sc_pooling = "namespaced";
    std::vector<std::string> sc_compare, sc_best;
    std::size_t sc_seeds = metrics::kDefaultF1Seeds, sc_batches = 1000, sc_batch_size = 750;
    std::uint64_t sc_seed = 0;
    sc->add_option("--benchmark", sc_dir, "benchmark directory")->required();
    sc->add_option("--results", sc_results, "results JSONL");
    sc->add_option("--compare", sc_compare, "further results files scored side by side");
    sc->add_option("--best-of-2", sc_best, "two results files merged by the model-expert oracle")->expected(2);
    sc->add_option("--out", sc_out, "score report JSON (default <results>.score.json)");
    sc->add_option("--f1-seeds", sc_seeds, "seeds for invalid-answer reassignment");
    sc->add_option("--batches", sc_batches, "bootstrap batches");
    sc->add_option("--batch-size", sc_batch_size, "bootstrap batch size");
    sc->add_option("--seed", sc_seed, "seed for reassignment and bootstrap");
    sc->add_option("--pooling", sc_pooling, "namespaced or category_mean");

    auto* rep = app.add_subcommand("report", "render score reports as Markdown");
    std::vector<std::string> rep_inputs;
    std::string rep_out;
    rep->add_option("reports", rep_inputs, "score report JSON files")->required();
    rep->add_option("--out", rep_out, "Markdown output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            BenchmarkConfig cfg = gen_config.empty() ? config_from_json(nlohmann::json::object()) : load_config(gen_config);
            if (gen_seed) cfg.seed = *gen_seed;
            if (gen_total) cfg.category_counts = equal_mix(*gen_total);
            const auto m = generate_benchmark(cfg, gen_out, resolve_created_at(created_at));
            std::cout << "generated " << m.total << " questions over " << m.series.size() << " series in " << gen_out
                      << "\n";
        } else if (ren->parsed()) {
            const auto s = render_benchmark(ren_dir, ren_conc);
            std::cout << "rendered " << s.images << " images (" << s.written << " written)\n";
        } else if (ev->parsed()) {
            RunConfig cfg;
            if (!ev_config.empty()) {
                auto j = nlohmann::json::parse(io::read_file(ev_config), nullptr, false);
                if (j.is_discarded()) throw ConfigError("run config is not valid JSON: " + ev_config);
                cfg = run_config_from_json(j);
            }
            if (!ev_model.empty()) cfg.model = ev_model;
            if (!ev_endpoint.empty()) cfg.endpoint = ev_endpoint;
            if (!ev_mode.empty()) cfg.mode = eval::mode_from_string(ev_mode);
            if (ev_seed) cfg.seed = *ev_seed;
            if (ev_conc) cfg.concurrency = *ev_conc;
            if (ev_results.empty())
                ev_results = (io::fs::path(ev_dir) / "results" / (sanitize(cfg.model) + ".jsonl")).string();
            const auto s = run_eval(ev_dir, cfg, ev_results);
            std::cout << "evaluated " << s.total << " questions (" << s.reused << " reused, " << s.issued
                      << " issued, " << s.invalid << " invalid, " << s.unanswered << " unanswered) -> " << ev_results
                      << "\n";
        } else if (sc->parsed()) {
            metrics::ScoreOptions opt;
            opt.f1.n_seeds = sc_seeds;
            opt.f1.seed = sc_seed;
            opt.f1.pooling = metrics::pooling_from_string(sc_pooling);
            opt.bootstrap.n_batches = sc_batches;
            opt.bootstrap.batch_size = sc_batch_size;
            opt.bootstrap.seed = sc_seed;
            std::vector<metrics::ScoreReport> reports;
            std::string default_out;
            if (!sc_results.empty()) {
                reports.push_back(score_results(sc_dir, sc_results, opt));
                default_out = sc_results + ".score.json";
            }
            for (const auto& r : sc_compare) reports.push_back(score_results(sc_dir, r, opt));
            if (!sc_best.empty()) {
                reports.push_back(score_best_of_2(sc_dir, sc_best[0], sc_best[1], opt));
                if (default_out.empty()) default_out = sc_best[0] + ".best-of-2.score.json";
            }
            if (reports.empty()) throw ConfigError("score needs --results, --compare or --best-of-2");
            if (default_out.empty()) default_out = sc_compare.front() + ".compare.score.json";
            const auto out = sc_out.empty() ? default_out : sc_out;
            nlohmann::ordered_json j;
            if (reports.size() == 1) {
                j = metrics::to_json(reports.front());
            } else {
                j = nlohmann::ordered_json::array();
                for (const auto& r : reports) j.push_back(metrics::to_json(r));
            }
            io::write_file(out, j.dump(2) + "\n");
            std::cout << metrics::format_table(reports);
        } else if (rep->parsed()) {
            std::vector<metrics::ScoreReport> reports;
            for (const auto& p : rep_inputs) {
                auto j = nlohmann::json::parse(io::read_file(p), nullptr, false);
                if (j.is_discarded()) throw SchemaError("score report is not valid JSON: " + p);
                if (j.is_array())
                    for (const auto& e : j) reports.push_back(metrics::report_from_json(e));
                else
                    reports.push_back(metrics::report_from_json(j));
            }
            const auto md = metrics::format_markdown(reports);
            if (rep_out.empty()) std::cout << md;
            else io::write_file(rep_out, md);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitOk;
}
