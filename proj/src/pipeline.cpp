#include "omicscl/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>

#include "omicscl/clustmetrics.hpp"
#include "omicscl/coxph.hpp"

namespace omicscl::pipeline {

using nlohmann::json;

namespace {

Split make_split(const std::string& name, const data::Cohort& cohort, std::vector<std::size_t> rows,
                 const std::vector<data::ZScoreParams>& zscore, const data::TimeScale& ts,
                 const std::vector<int>& truth_all) {
    Split s;
    s.name = name;
    const data::Cohort sub = cohort.subset(rows);
    s.patient_ids = sub.patient_ids;
    for (std::size_t v = 0; v < sub.views.size(); ++v) s.data.views.push_back(zscore[v].apply(sub.views[v]));
    s.data.surv = {ts.apply(sub.time), sub.event};
    s.raw_time = sub.time;
    for (std::size_t r : rows) s.truth.push_back(truth_all[r]);
    s.rows = std::move(rows);
    return s;
}

std::size_t distinct(std::span<const int> labels) {
    return std::set<int>(labels.begin(), labels.end()).size();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

// Every CSV artifact starts with the effective config as a comment line.
void config_line(std::ostream& out, const Config& cfg) { out << "# config=" << cfg.to_json().dump() << '\n'; }

Matrix one_hot(std::span<const int> labels, int k) {
    // Cluster 0 is the reference level.
    Matrix m(labels.size(), static_cast<std::size_t>(std::max(k - 1, 1)), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] > 0) m(i, static_cast<std::size_t>(labels[i] - 1)) = 1.0;
    return m;
}

EvalReport score(const Split& split, const Matrix& target, const Clustering& cl, int k) {
    EvalReport r;
    r.split = split.name;
    r.k = k;
    r.labels = cl.labels;
    const auto& surv = split.data.surv;
    r.c_index = surv::c_index(cl.risk, surv.t, surv.e);
    r.risk_statistic = cluster::to_string(cl.risk_map.derivation);

    const std::size_t groups = distinct(cl.labels);
    if (groups >= 2) {
        r.logrank = surv::logrank_k(surv.t, surv.e, cl.labels);
        if (groups < target.rows()) r.silhouette = clust::silhouette(target, cl.labels);
    }
    const bool any_known = std::any_of(split.truth.begin(), split.truth.end(),
                                       [](int t) { return t != clust::kUnknown; });
    if (any_known) {
        r.purity = clust::purity(cl.labels, split.truth);
        r.ari = clust::ari(cl.labels, split.truth);
        r.nmi = clust::nmi(cl.labels, split.truth);
        r.accuracy_raw = clust::label_accuracy(cl.labels, split.truth);
        r.accuracy_matched = clust::matched_accuracy(cl.labels, split.truth);
    }

    r.cluster_sizes.assign(static_cast<std::size_t>(k), 0);
    for (int l : cl.labels) ++r.cluster_sizes[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
        std::vector<double> t;
        std::vector<int> e;
        for (std::size_t i = 0; i < cl.labels.size(); ++i)
            if (cl.labels[i] == c) {
                t.push_back(split.raw_time[i]);
                e.push_back(surv.e[i]);
            }
        r.km_curves.push_back(surv::km_fit(t, e));
    }
    return r;
}

}  // namespace

const Split& Prepared::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw ConfigError("unknown split '" + name + "'");
}

Prepared prepare(const Config& cfg) {
    cfg.validate();
    if (cfg.data_dir.empty()) return prepare(cfg, data::generate_synthetic(cfg.synthetic));
    return prepare(cfg, data::load_cohort(data::default_paths(cfg.data_dir, cfg.modalities)));
}

Prepared prepare(const Config& cfg, data::Cohort cohort) {
    cfg.validate();
    Prepared p;
    p.cohort = std::move(cohort);
    p.cohort.validate();

    const auto idx = data::split(p.cohort.size(), cfg.split);
    const data::Cohort train_rows = p.cohort.subset(idx.train);
    for (const auto& view : train_rows.views) p.zscore.push_back(data::zscore_fit(view, train_rows.patient_ids));
    p.time_scale = data::normalize_times(train_rows.time, train_rows.patient_ids);

    const auto truth = clust::encode_labels(p.cohort.subtype, &p.subtype_classes);
    p.train = make_split("train", p.cohort, idx.train, p.zscore, p.time_scale, truth);
    p.val = make_split("val", p.cohort, idx.val, p.zscore, p.time_scale, truth);
    p.test = make_split("test", p.cohort, idx.test, p.zscore, p.time_scale, truth);
    return p;
}

train::ValidationOptions validation_options(const Config& cfg) {
    train::ValidationOptions v;
    v.fusion = cfg.fusion;
    v.kmeans.n_init = cfg.kmeans_n_init;
    v.kmeans.max_iter = cfg.kmeans_max_iter;
    return v;
}

train::TrainResult run_training(const Config& cfg, const Prepared& prep,
                                const std::function<void(const train::EpochRecord&)>& on_epoch) {
    std::vector<std::size_t> dims;
    for (const auto& v : prep.train.data.views) dims.push_back(v.cols());
    Model model = train::init_model(cfg.modalities, dims, cfg.encoder, cfg.train.seed);
    return train::train(std::move(model), prep.train.data, prep.val.data, cfg.loss, cfg.train,
                        validation_options(cfg), on_epoch);
}

Matrix fused_embeddings(const Config& cfg, const Model& model, const Split& split) {
    const auto embeds = embed_all(model, split.data.views);
    return cluster::fuse(embeds, cfg.fusion);
}

Clustering cluster_split(const Config& cfg, const Matrix& reference, const Split& reference_split,
                         const Matrix& target, int k) {
    if (static_cast<std::size_t>(k) > reference.rows())
        throw std::invalid_argument("k=" + std::to_string(k) + " exceeds the " + std::to_string(reference.rows()) +
                                    " patients available for clustering");
    Rng rng = Rng(cfg.seed).derive("eval-kmeans");
    cluster::KMeansOptions opts;
    opts.n_init = cfg.kmeans_n_init;
    opts.max_iter = cfg.kmeans_max_iter;
    Clustering c;
    c.kmeans = cluster::kmeans_fit(reference, k, rng, opts);
    c.risk_map = cluster::cluster_risk(c.kmeans.labels, k, reference_split.data.surv).map;
    c.labels = cluster::assign(c.kmeans, target);
    c.risk = c.risk_map.patient_risk(c.labels);
    return c;
}

EvalReport evaluate(const Config& cfg, const Matrix& target, const Prepared& prep, const Matrix& reference, int k,
                    const std::string& split_name) {
    const Split& split = prep.split(split_name);
    const bool own = cfg.cluster_fit == "split";
    const Clustering cl = cluster_split(cfg, own ? target : reference, own ? split : prep.train, target, k);
    return score(split, target, cl, k);
}

EvalReport evaluate(const Config& cfg, const Model& model, const Prepared& prep, int k,
                    const std::string& split_name) {
    const Matrix target = fused_embeddings(cfg, model, prep.split(split_name));
    const Matrix reference = cfg.cluster_fit == "split" ? target : fused_embeddings(cfg, model, prep.train);
    return evaluate(cfg, target, prep, reference, k, split_name);
}

json EvalReport::to_json() const {
    json j;
    j["split"] = split;
    j["k"] = k;
    j["c_index"] = c_index;
    j["risk_statistic"] = risk_statistic;
    if (logrank) {
        j["logrank_statistic"] = logrank->statistic;
        j["logrank_df"] = logrank->df;
        j["logrank_p"] = logrank->p_value;
    } else {
        j["logrank_statistic"] = nullptr;
        j["logrank_df"] = nullptr;
        j["logrank_p"] = nullptr;
    }
    j["silhouette"] = optional_json(silhouette);
    j["purity"] = optional_json(purity);
    j["ari"] = optional_json(ari);
    j["nmi"] = optional_json(nmi);
    j["accuracy_raw"] = optional_json(accuracy_raw);
    j["accuracy_matched"] = optional_json(accuracy_matched);
    j["cluster_sizes"] = cluster_sizes;
    return j;
}

// ---------------------------------------------------------------- ablation

json AblationReport::to_json() const {
    auto run = [](const AblationRun& r) {
        return json{{"alpha", r.alpha},
                    {"seed", r.config.at("seed")},
                    {"test_c_index", r.test_c_index},
                    {"best_val_c_index", r.best_val_c_index},
                    {"best_epoch", r.best_epoch},
                    {"epochs_run", r.epochs_run},
                    {"config", r.config}};
    };
    return json{{"with_survival", run(with_survival)}, {"without_survival", run(without_survival)}, {"delta", delta}};
}

AblationReport ablate(const Config& cfg) {
    const Prepared prep = prepare(cfg);
    auto run = [&](double alpha) {
        Config c = cfg;
        c.loss.alpha = alpha;
        const auto result = run_training(c, prep);
        AblationRun r;
        r.alpha = alpha;
        r.test_c_index = evaluate(c, result.model, prep, c.k, "test").c_index;
        r.best_val_c_index = result.report.best_val_c_index;
        r.best_epoch = result.report.best_epoch;
        r.epochs_run = static_cast<int>(result.report.epochs.size());
        r.config = c.to_json();
        return r;
    };
    AblationReport rep;
    rep.with_survival = run(cfg.loss.alpha);
    rep.without_survival = cfg.loss.alpha == 0.0 ? rep.with_survival : run(0.0);
    rep.without_survival.alpha = 0.0;
    rep.delta = rep.with_survival.test_c_index - rep.without_survival.test_c_index;
    return rep;
}

// ------------------------------------------------------------------- sweep

std::vector<SweepRow> sweep(const Config& cfg, const Model& model, const Prepared& prep, int k_min, int k_max) {
    if (k_min < 2 || k_max < k_min) throw ConfigError("sweep needs 2 <= k_min <= k_max");
    const Split& split = prep.split(cfg.eval_split);
    const Matrix fused_train = fused_embeddings(cfg, model, prep.train);
    const Matrix target = fused_embeddings(cfg, model, split);
    const bool own = cfg.cluster_fit == "split";
    const Matrix& reference = own ? target : fused_train;
    const Split& reference_split = own ? split : prep.train;
    if (static_cast<std::size_t>(k_max) >= reference.rows())
        throw ConfigError("sweep k_max must be below the number of patients clustered");

    cox::CoxOptions cox_opts;
    cox_opts.ridge = cfg.cox_ridge;
    const auto& ts = prep.train.data.surv;
    const auto& es = split.data.surv;

    // The embedding-feature Cox model does not depend on k.
    const auto standardizer = cox::Standardizer::fit(fused_train);
    const auto cox_embed = cox::cox_fit(standardizer.apply(fused_train), ts.t, ts.e, cox_opts);
    const double cox_embed_c = surv::c_index(cox::cox_risk(cox_embed, standardizer.apply(target)), es.t, es.e);

    std::vector<SweepRow> rows;
    for (int k = k_min; k <= k_max; ++k) {
        const Clustering cl = cluster_split(cfg, reference, reference_split, target, k);
        const EvalReport ev = score(split, target, cl, k);
        const auto train_labels = cluster::assign(cl.kmeans, fused_train);
        const auto cox_onehot = cox::cox_fit(one_hot(train_labels, k), ts.t, ts.e, cox_opts);

        SweepRow row;
        row.k = k;
        row.omicscl_c_index = ev.c_index;
        row.cox_embeddings_c_index = cox_embed_c;
        row.cox_onehot_c_index = surv::c_index(cox::cox_risk(cox_onehot, one_hot(cl.labels, k)), es.t, es.e);
        row.purity = ev.purity;
        row.silhouette = ev.silhouette.value_or(0.0);
        rows.push_back(row);
    }
    return rows;
}

json sweep_to_json(const std::vector<SweepRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows)
        arr.push_back({{"k", r.k},
                       {"omicscl_c_index", r.omicscl_c_index},
                       {"cox_embeddings_c_index", r.cox_embeddings_c_index},
                       {"cox_onehot_c_index", r.cox_onehot_c_index},
                       {"purity", optional_json(r.purity)},
                       {"silhouette", r.silhouette}});
    return arr;
}

// --------------------------------------------------------------- artifacts

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_embeddings_csv(const std::filesystem::path& path, const Config& cfg, const Model& model,
                          const Prepared& prep) {
    auto out = open_out(path);
    config_line(out, cfg);
    bool header = false;
    for (const Split* s : {&prep.train, &prep.val, &prep.test}) {
        const Matrix z = fused_embeddings(cfg, model, *s);
        if (!header) {
            out << "patient_id,split";
            for (std::size_t c = 0; c < z.cols(); ++c) out << ",z" << c;
            out << '\n';
            header = true;
        }
        for (std::size_t r = 0; r < z.rows(); ++r) {
            out << s->patient_ids[r] << ',' << s->name;
            for (double v : z.row(r)) out << ',' << format_double(v);
            out << '\n';
        }
    }
}

void write_train_report(const std::filesystem::path& path, const Config& cfg, const train::TrainReport& report) {
    auto out = open_out(path);
    out << json{{"type", "config"}, {"config", cfg.to_json()}}.dump() << '\n';
    for (const auto& e : report.epochs)
        out << json{{"type", "epoch"},
                    {"epoch", e.epoch},
                    {"lr", e.lr},
                    {"train_loss", e.train_loss},
                    {"train_ntxent", e.train_ntxent},
                    {"train_survival", e.train_survival},
                    {"val_c_index", e.val_c_index}}
                   .dump()
            << '\n';
    out << json{{"type", "summary"},
                {"best_epoch", report.best_epoch},
                {"best_val_c_index", report.best_val_c_index},
                {"early_stopped", report.early_stopped},
                {"epochs_run", report.epochs.size()},
                {"checkpoint", "checkpoint.json"}}
               .dump()
        << '\n';
}

void write_km_csv(const std::filesystem::path& path, const Config& cfg, const EvalReport& report) {
    auto out = open_out(path);
    config_line(out, cfg);
    out << "cluster,time,survival,at_risk,events\n";
    for (std::size_t c = 0; c < report.km_curves.size(); ++c) {
        const auto& km = report.km_curves[c];
        out << c << ",0,1," << report.cluster_sizes[c] << ",0\n";
        for (std::size_t i = 0; i < km.time.size(); ++i)
            out << c << ',' << format_double(km.time[i]) << ',' << format_double(km.survival[i]) << ','
                << km.at_risk[i] << ',' << km.events[i] << '\n';
    }
}

void write_clusters_csv(const std::filesystem::path& path, const Config& cfg, const Split& split,
                        const EvalReport& report) {
    auto out = open_out(path);
    config_line(out, cfg);
    out << "patient_id,cluster\n";
    for (std::size_t i = 0; i < report.labels.size(); ++i) out << split.patient_ids[i] << ',' << report.labels[i] << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const Config& cfg, const std::vector<SweepRow>& rows) {
    auto out = open_out(path);
    config_line(out, cfg);
    out << "k,omicscl_c_index,cox_embeddings_c_index,cox_onehot_c_index,purity,silhouette\n";
    for (const auto& r : rows)
        out << r.k << ',' << format_double(r.omicscl_c_index) << ',' << format_double(r.cox_embeddings_c_index) << ','
            << format_double(r.cox_onehot_c_index) << ',' << (r.purity ? format_double(*r.purity) : "") << ','
            << format_double(r.silhouette) << '\n';
}

}  // namespace omicscl::pipeline
