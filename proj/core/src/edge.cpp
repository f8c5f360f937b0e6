#include "prunesearch/edge.hpp"

#include <algorithm>
#include <chrono>

#include "prunesearch/text.hpp"

namespace prunesearch::edge {

ProcessedQuery process_query(std::string_view raw, std::string_view session_id,
                             const semantics::SimilarityProvider& p, std::size_t expand_n) {
    if (raw.empty())
        throw QueryError("empty query");
    ProcessedQuery q;
    q.raw = std::string(raw);
    q.session_id = std::string(session_id);
    q.terms = text::pipeline(raw);
    if (q.terms.empty())
        throw QueryError("query reduced to empty");
    q.expanded = semantics::expand_query(q.terms, expand_n, p);
    return q;
}

PruneDecision prune(const ProcessedQuery& q, std::span<const analytics::Abstract> abstracts,
                    std::size_t k, const semantics::SimilarityProvider& p) {
    if (abstracts.empty())
        throw std::invalid_argument("prune: no abstracts");
    if (k == 0)
        throw std::invalid_argument("prune: k must be >= 1");

    PruneDecision decision;
    decision.scored.reserve(abstracts.size());
    for (const auto& abstract : abstracts) {
        double sum = 0.0;
        for (const auto& term : q.expanded) {
            double best = 0.0;
            for (const auto& entry : abstract.entries) {
                double s = term == entry.term ? 1.0 : p.similarity(term, entry.term);
                if (s > best) best = s;
            }
            sum += best;
        }
        double score = q.expanded.empty() ? 0.0 : sum / static_cast<double>(q.expanded.size());
        decision.scored.emplace_back(abstract.cluster_id, score);
    }
    std::sort(decision.scored.begin(), decision.scored.end());

    auto ranked = decision.scored;
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::size_t take = std::min(k, ranked.size());
    decision.chosen.reserve(take);
    for (std::size_t i = 0; i < take; i++)
        decision.chosen.push_back(ranked[i].first);
    return decision;
}

cloud::RankedResult LocalCloudBackend::search(std::span<const corpus::TermToken> tokens,
                                              std::span<const int> cluster_ids) {
    return store_.search(tokens, cluster_ids);
}

std::vector<cloud::ClusterSummary> LocalCloudBackend::cluster_info() {
    return store_.summaries();
}

void LocalCloudBackend::upload(const corpus::UploadBatch& batch) {
    store_.upload(batch);
}

EdgeEngine::EdgeEngine(EdgeConfig config, semantics::SimilarityProvider provider,
                       analytics::AbstractSet abstracts, CloudBackend& backend)
    : config_(std::move(config)), provider_(std::move(provider)), backend_(backend),
      abstracts_(std::move(abstracts)) {
    now_ms_ = [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

void EdgeEngine::set_clock(std::function<std::int64_t()> now_ms) {
    now_ms_ = std::move(now_ms);
}

void EdgeEngine::attach_history_file(std::filesystem::path path) {
    std::lock_guard lock(mutex_);
    history_file_ = std::make_unique<analytics::HistoryLog>(std::move(path));
}

void EdgeEngine::preload_history(std::vector<analytics::SearchRecord> records) {
    std::lock_guard lock(mutex_);
    history_ = std::move(records);
}

SearchOutcome EdgeEngine::execute_search(std::string_view raw, std::string_view session_id) {
    using clock = std::chrono::steady_clock;
    SearchOutcome outcome;

    auto edge_begin = clock::now();
    analytics::AbstractSet snapshot;
    {
        std::lock_guard lock(mutex_);
        snapshot = abstracts_;
    }
    ProcessedQuery q = process_query(raw, session_id, provider_, config_.expand_n);
    PruneDecision decision = prune(q, snapshot.abstracts, config_.prune_k, provider_);

    std::vector<corpus::TermToken> tokens;
    tokens.reserve(q.expanded.size());
    for (const auto& term : q.expanded)
        tokens.push_back(corpus::tokenize_term(term, config_.key));
    auto edge_end = clock::now();

    outcome.result = backend_.search(tokens, decision.chosen);
    auto cloud_end = clock::now();

    outcome.chosen_clusters = decision.chosen;
    outcome.edge_ms = std::chrono::duration<double, std::milli>(edge_end - edge_begin).count();
    outcome.cloud_ms = std::chrono::duration<double, std::milli>(cloud_end - edge_end).count();

    analytics::SearchRecord record;
    record.session_id = std::string(session_id);
    record.timestamp_ms = now_ms_();
    record.raw_query = std::string(raw);
    record.terms = q.terms; // original terms only; expansion stays out of the model
    record.hit_clusters = decision.chosen;
    record.result_count = outcome.result.entries.size();

    bool run_maint = false;
    {
        std::lock_guard lock(mutex_);
        history_.push_back(record);
        if (history_file_)
            history_file_->append(record);
        searches_since_maintenance_++;
        if (config_.maintenance_every > 0 &&
            searches_since_maintenance_ >= config_.maintenance_every) {
            searches_since_maintenance_ = 0;
            run_maint = true;
        }
    }
    if (run_maint && config_.policy != analytics::RadiusPolicy::static_s3bd)
        run_maintenance();
    return outcome;
}

void EdgeEngine::init_abstracts_from_cloud(const std::map<std::string, std::string>& seed_terms) {
    auto summaries = backend_.cluster_info();
    std::map<int, std::vector<std::pair<corpus::TermToken, std::size_t>>> assoc;
    for (const auto& s : summaries)
        for (const auto& m : s.members)
            assoc[s.cluster_id].emplace_back(m.token, m.doc_count);
    auto abstracts = analytics::init_abstracts(assoc, config_.abstract_seed_n, seed_terms);
    std::lock_guard lock(mutex_);
    abstracts_.abstracts = std::move(abstracts);
    abstracts_.history_fingerprint.clear();
    abstracts_.last_stats.clear();
}

analytics::MaintenanceReport EdgeEngine::run_maintenance() {
    std::lock_guard maintenance_lock(maintenance_mutex_);
    auto summaries = backend_.cluster_info();
    std::vector<analytics::ClusterSummaryLite> lite;
    lite.reserve(summaries.size());
    for (const auto& s : summaries)
        lite.push_back({s.cluster_id, s.members.size()});

    // work on copies; swap the updated set in at the end
    std::vector<analytics::SearchRecord> history;
    analytics::AbstractSet updated;
    {
        std::lock_guard lock(mutex_);
        history = history_;
        updated = abstracts_;
    }
    analytics::MaintenanceOptions opts;
    opts.policy = config_.policy;
    auto report = analytics::maintain_abstracts(history, updated, lite, provider_, opts);
    {
        std::lock_guard lock(mutex_);
        abstracts_ = std::move(updated);
    }
    return report;
}

analytics::AbstractSet EdgeEngine::abstracts_snapshot() const {
    std::lock_guard lock(mutex_);
    return abstracts_;
}

std::vector<analytics::SearchRecord> EdgeEngine::history_snapshot() const {
    std::lock_guard lock(mutex_);
    return history_;
}

std::size_t EdgeEngine::history_size() const {
    std::lock_guard lock(mutex_);
    return history_.size();
}

} // namespace prunesearch::edge
