// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dep/analysis.hpp"
#include "dep/embedding.hpp"
#include "dep/io.hpp"
#include "dep/metrics.hpp"
#include "dep/vocab.hpp"
#include "support/oracles.hpp"

namespace {

using dep::io::Json;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
    std::string first_failure;

    void fail(const std::string& what) {
        if (pass) first_failure = what;
        pass = false;
    }
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Json load_fixture(const std::string& name) {
    return dep::io::parse_json(dep::io::read_file(std::string(DEP_FIXTURE_DIR) + "/" + name));
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), format, a, b, c);
    return buf;
}

bool rows_bit_equal(const dep::EmbeddingMatrix& m, const dep::testing::Rows& rows) {
    if (m.rows() != rows.size()) return false;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.dim()) return false;
        if (std::memcmp(m.row(r).data(), rows[r].data(), rows[r].size() * sizeof(float)) != 0) return false;
    }
    return true;
}

dep::EmbeddingMatrix matrix_of(const dep::testing::Rows& rows, std::uint64_t dim) {
    return dep::EmbeddingMatrix(rows.size(), dim, dep::testing::flatten(rows));
}

Outcome glue_reduction_identity() {
    Outcome o;
    const auto start = Clock::now();
    const Json fx = load_fixture("glue_reduction.json");
    const double tol = fx["tolerance_pp"].get<double>();
    double worst = 0.0;
    std::size_t cells = 0;
    for (const auto& cell : fx["cells"]) {
        const std::string model = cell["model"].get<std::string>();
        dep::ParamCount params;
        params.poep = fx["poep_pct"][model].get<double>() / 100.0;
        const double computed = 100.0 * dep::pr_all(cell["pr_emb_pct"].get<double>() / 100.0, params);
        const double deviation = std::abs(computed - cell["pr_all_pct"].get<double>());
        worst = std::max(worst, deviation);
        if (deviation > tol) {
            o.fail(model + "/" + cell["dataset"].get<std::string>() + fmt(" off by %.3f pp", deviation));
        }
        ++cells;
    }
    if (cells != 54) o.fail("expected 54 cells, found " + std::to_string(cells));
    const double elapsed = seconds_since(start);
    if (elapsed >= 1.0) o.fail(fmt("took %.3f s", elapsed));
    o.detail = std::to_string(cells) + " cells, max deviation " + fmt("%.3f pp", worst) + fmt(", %.3f s", elapsed);
    return o;
}

Outcome bert_size_counts() {
    Outcome o;
    const Json fx = load_fixture("bert_sizes.json");
    const double tol = fx["tolerance_m"].get<double>();
    double worst = 0.0;
    for (const auto& row : fx["sizes"]) {
        dep::ModelConfig c;
        c.name = row["size"].get<std::string>();
        c.vocab_size = fx["vocab_size"].get<std::uint64_t>();
        c.num_layers = row["num_layers"].get<std::uint64_t>();
        c.num_heads = row["num_heads"].get<std::uint64_t>();
        c.d_model = row["d_model"].get<std::uint64_t>();
        const auto p = dep::count_params(c);
        const double n_m = static_cast<double>(p.n_total) / 1e6;
        const double dev = std::abs(n_m - row["n_total_m"].get<double>());
        worst = std::max(worst, dev);
        if (dev > tol) o.fail(c.name + fmt(" N %.3fM vs %.1fM", n_m, row["n_total_m"].get<double>()));
        if (round1(static_cast<double>(p.n_emb) / 1e6) != row["n_emb_m"].get<double>()) {
            o.fail(c.name + fmt(" N_emb %.3fM", static_cast<double>(p.n_emb) / 1e6));
        }
        if (dep::to_percent_1dp(p.poep) != row["poep_pct"].get<double>()) {
            o.fail(c.name + fmt(" PoEP %.2f%%", 100.0 * p.poep));
        }
    }
    o.detail = std::to_string(fx["sizes"].size()) + " sizes, max |N - table| " + fmt("%.3f M", worst);
    return o;
}

Outcome embedding_allocation() {
    Outcome o;
    const Json fx = load_fixture("param_allocation.json");
    std::string listing;
    for (const auto& row : fx["models"]) {
        const std::string name = row["model"].get<std::string>();
        const auto config = dep::model_preset(name);
        if (!config) {
            o.fail("no preset " + name);
            continue;
        }
        const std::uint64_t n_emb = config->vocab_size * config->d_model;
        const auto p = dep::count_params(*config);
        if (p.n_emb != n_emb) o.fail(name + " count_params n_emb != |V| d");
        const double n_emb_m = round1(static_cast<double>(n_emb) / 1e6);
        if (n_emb_m != row["n_emb_m"].get<double>()) {
            o.fail(name + fmt(" N_emb %.1fM vs %.1fM", n_emb_m, row["n_emb_m"].get<double>()));
        }
        listing += (listing.empty() ? "" : ", ") + name + "=" + fmt("%.1fM", n_emb_m);
    }
    o.detail = listing;
    return o;
}

Outcome roundtrip_property() {
    Outcome o;
    const auto start = Clock::now();
    std::mt19937_64 rng(20240501);
    const int instances = 200;
    for (int i = 0; i < instances; ++i) {
        const std::uint32_t vocab = 1 + static_cast<std::uint32_t>(rng() % 3000);
        const std::size_t dim = 1 + rng() % 64;
        const auto rows = dep::testing::random_rows(rng, vocab, dim);
        const auto seqs = (i % 2 == 0) ? dep::testing::skewed_sequences(rng, 1 + rng() % 100, 64, vocab)
                                       : dep::testing::random_sequences(rng, 1 + rng() % 100, 64, vocab);
        const dep::TokenizedDataset d(seqs, vocab);
        const auto ordering = (rng() % 2) ? dep::Ordering::AscendingId : dep::Ordering::FrequencyDescending;
        const auto keep = dep::testing::random_subset(rng, vocab, 0.01);

        const dep::EmbeddingMatrix e = matrix_of(rows, dim);
        const auto remap = dep::build_remap(dep::scan_dataset(d), ordering, keep);
        const auto pruned = dep::prune_embeddings(e, remap);
        if (!dep::bit_identical(dep::restore_embeddings(e, pruned, remap), e)) {
            o.fail("instance " + std::to_string(i) + ": restore(E, prune(E, R), R) != E");
        }
        if (!(dep::invert_remap(dep::apply_remap(d, remap), remap) == d)) {
            o.fail("instance " + std::to_string(i) + ": invert(apply(D, R), R) != D");
        }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 30.0) o.fail(fmt("took %.2f s", elapsed));
    o.detail = std::to_string(instances) + " instances" + fmt(", %.2f s", elapsed);
    return o;
}

Outcome partition_invariance() {
    Outcome o;
    std::mt19937_64 rng(8);
    const auto config = *dep::model_preset("bert-base");
    const int corpora = 50;
    for (int i = 0; i < corpora; ++i) {
        const std::uint32_t vocab = static_cast<std::uint32_t>(config.vocab_size);
        const auto seqs = dep::testing::skewed_sequences(rng, 1 + rng() % 400, 128, vocab);
        const dep::TokenizedDataset d(seqs, vocab);
        const auto keep = std::vector<dep::TokenId>{0, 100, 101, 102, 103};
        std::string reference;
        for (std::size_t partitions : {1u, 2u, 8u}) {
            const auto freqs = dep::scan_dataset(d, partitions);
            const auto remap = dep::build_remap(freqs, dep::Ordering::FrequencyDescending, keep);
            dep::ReportInputs inputs;
            inputs.freqs = &freqs;
            inputs.timestamp = "1970-01-01T00:00:00Z";
            const auto report = dep::build_report(remap, config, inputs);
            std::string bytes(reinterpret_cast<const char*>(freqs.counts().data()),
                              freqs.counts().size() * sizeof(std::uint64_t));
            bytes += dep::io::dump(dep::io::remap_to_json(remap));
            bytes += dep::io::dump(dep::io::report_to_json(report));
            if (reference.empty()) {
                reference = bytes;
            } else if (bytes != reference) {
                o.fail("corpus " + std::to_string(i) + " differs at " + std::to_string(partitions) + " partitions");
            }
        }
    }
    o.detail = std::to_string(corpora) + " corpora x partitions {1, 2, 8}";
    return o;
}

Outcome heaps_recovery() {
    Outcome o;
    struct Exact {
        double k;
        double beta;
        std::uint64_t base;
    };
    // Integer-valued curves: V = k * n^beta exactly at n = base^i.
    const std::vector<Exact> exact{{2.0, 0.5, 4}, {1.0, 1.0, 2}, {3.0, 1.0 / 3.0, 8}, {5.0, 0.25, 16}};
    double worst_rmse = 0.0;
    for (const auto& e : exact) {
        dep::GrowthCurve c;
        std::uint64_t n = e.base;
        for (int i = 1; i <= 7; ++i, n *= e.base) {
            c.points.push_back({n, static_cast<std::uint64_t>(std::llround(e.k * std::pow(double(n), e.beta)))});
        }
        const auto fit = dep::fit_heaps(c);
        worst_rmse = std::max(worst_rmse, fit.rmse_log);
        if (fit.rmse_log > 1e-9) o.fail(fmt("exact curve rmse_log %.3g", fit.rmse_log));
        if (std::abs(fit.k - e.k) > 1e-9 * e.k || std::abs(fit.beta - e.beta) > 1e-9) {
            o.fail(fmt("exact fit k=%.12g beta=%.12g", fit.k, fit.beta));
        }
    }

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> k_dist(1.0, 50.0);
    std::uniform_real_distribution<double> beta_dist(0.3, 0.9);
    std::uniform_real_distribution<double> noise(-0.02, 0.02);
    double worst_beta = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const double k = k_dist(rng);
        const double beta = beta_dist(rng);
        dep::GrowthCurve c;
        for (std::uint64_t n = 1; n <= (1ull << 30); n *= 2) {
            const double v = k * std::pow(static_cast<double>(n), beta) * (1.0 + noise(rng));
            c.points.push_back({n, std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(v)))});
        }
        const auto fit = dep::fit_heaps(c);
        const double err = std::abs(fit.beta - beta);
        worst_beta = std::max(worst_beta, err);
        if (err > 0.05) o.fail("trial " + std::to_string(t) + fmt(" beta error %.4f", err));
    }
    o.detail = fmt("exact max rmse_log %.2g; noisy max |beta error| %.4f over ", worst_rmse, worst_beta) +
               std::to_string(trials) + " trials";
    return o;
}

Outcome growth_bound() {
    Outcome o;
    std::vector<dep::TokenizedDataset> corpora;
    corpora.push_back(dep::io::load_dataset(std::string(DEP_FIXTURE_DIR) + "/tiny_corpus.txt", 6));
    corpora.push_back(dep::io::load_dataset(std::string(DEP_FIXTURE_DIR) + "/empty_corpus.txt", 4));
    corpora.push_back(dep::TokenizedDataset({{7, 7, 7}}, 8));
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const std::uint32_t vocab = 1 + static_cast<std::uint32_t>(rng() % (i < 50 ? 50 : 30522));
        corpora.emplace_back(i % 2 ? dep::testing::random_sequences(rng, 1 + rng() % 200, 64, vocab)
                                   : dep::testing::skewed_sequences(rng, 1 + rng() % 200, 64, vocab),
                             vocab);
    }
    std::size_t points = 0;
    for (std::size_t i = 0; i < corpora.size(); ++i) {
        const auto& d = corpora[i];
        const auto used = dep::scan_dataset(d).used_count();
        for (auto policy : {dep::CheckpointPolicy::PowersOfTwo, dep::CheckpointPolicy::EveryToken}) {
            const auto curve = dep::growth_curve(d, policy);
            for (const auto& p : curve.points) {
                ++points;
                if (p.unique_tokens > std::min<std::uint64_t>(p.tokens_seen, d.vocab_size())) {
                    o.fail("corpus " + std::to_string(i) + " exceeds min(n, |V|) at n=" + std::to_string(p.tokens_seen));
                }
            }
            const std::uint64_t final_unique = curve.points.empty() ? 0 : curve.points.back().unique_tokens;
            if (final_unique != used) o.fail("corpus " + std::to_string(i) + " final point != |V'|");
            if (!curve.points.empty() && curve.points.back().tokens_seen != d.total_tokens()) {
                o.fail("corpus " + std::to_string(i) + " final point not at total tokens");
            }
        }
    }
    o.detail = std::to_string(corpora.size()) + " corpora, " + std::to_string(points) + " points";
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    std::mt19937_64 rng(1000);
    const int instances = 1000;
    for (int i = 0; i < instances; ++i) {
        const std::uint32_t vocab = 1 + static_cast<std::uint32_t>(rng() % 64);
        const std::size_t dim = 1 + rng() % 8;
        const auto seqs = dep::testing::random_sequences(rng, rng() % 12, 16, vocab);
        const auto rows = dep::testing::random_rows(rng, vocab, dim);
        auto selected = dep::testing::random_subset(rng, vocab, 0.5);
        std::shuffle(selected.begin(), selected.end(), rng);
        const auto learned = dep::testing::random_rows(rng, selected.size(), dim);
        const auto remap = dep::RemapTable::from_inverse(vocab, selected);
        const auto e = matrix_of(rows, dim);
        const std::string tag = "instance " + std::to_string(i);

        if (!rows_bit_equal(dep::prune_embeddings(e, remap), dep::testing::oracle_gather(rows, selected))) {
            o.fail(tag + ": gather");
        }
        const auto restored = dep::restore_embeddings(e, dep::EmbeddingMatrix(selected.size(), dim,
                                                                               dep::testing::flatten(learned)),
                                                      remap);
        if (!rows_bit_equal(restored, dep::testing::oracle_scatter(rows, learned, selected))) o.fail(tag + ": scatter");

        const auto expected_counts = dep::testing::oracle_counts(seqs, vocab);
        const auto freqs = dep::scan_dataset(dep::TokenizedDataset(seqs, vocab));
        if (std::vector<std::uint64_t>(freqs.counts().begin(), freqs.counts().end()) != expected_counts) {
            o.fail(tag + ": counting");
        }
        if (dep::find_unused_tokens(freqs) != dep::testing::oracle_unused(expected_counts)) o.fail(tag + ": unused");
    }
    o.detail = std::to_string(instances) + " instances each for gather, scatter, counting, unused filtering";
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria{
        {"GLUE reduction identity PR_all = PR_emb x PoEP", glue_reduction_identity},
        {"BERT size parameter counts", bert_size_counts},
        {"embedding allocation N_emb = |V| d", embedding_allocation},
        {"prune/restore and remap roundtrip", roundtrip_property},
        {"partition invariance", partition_invariance},
        {"Heaps recovery", heaps_recovery},
        {"growth-curve bound", growth_bound},
        {"oracle equivalence", oracle_equivalence},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].check();
        } catch (const std::exception& e) {
            outcome.fail(std::string("exception: ") + e.what());
        }
        std::printf("%s [%zu] %s: %s%s%s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    outcome.detail.c_str(), outcome.pass ? "" : "; first failure: ",
                    outcome.first_failure.c_str());
        if (!outcome.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
