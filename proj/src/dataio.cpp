#include "omicscl/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "omicscl/rng.hpp"

namespace omicscl::data {

namespace fs = std::filesystem;

// ------------------------------------------------------------------- CSV

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            cur.push_back(c);
        } else if (c == ',' && !quoted) {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(t.header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(lineno);
    }
    if (t.header.empty()) throw std::runtime_error(path.string() + ": empty file");
    return t;
}

bool is_missing(std::string_view s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower.empty() || lower == "na" || lower == "nan" || lower == "null" || lower == "none";
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::size_t column_index(const CsvTable& t, const std::string& name, const fs::path& path) {
    auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw std::runtime_error(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - t.header.begin());
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

// ---------------------------------------------------------------- cohort

Cohort Cohort::subset(std::span<const std::size_t> rows) const {
    Cohort c;
    c.modality_names = modality_names;
    c.feature_names = feature_names;
    for (const auto& v : views) c.views.push_back(v.select_rows(rows));
    for (std::size_t r : rows) {
        c.patient_ids.push_back(patient_ids.at(r));
        c.time.push_back(time.at(r));
        c.event.push_back(event.at(r));
        c.subtype.push_back(subtype.at(r));
    }
    return c;
}

void Cohort::validate() const {
    const std::size_t n = patient_ids.size();
    if (time.size() != n || event.size() != n || subtype.size() != n)
        throw DimensionError("cohort: survival/subtype arrays not aligned with patient ids");
    if (views.size() != modality_names.size()) throw DimensionError("cohort: modality count mismatch");
    for (const auto& v : views)
        if (v.rows() != n) throw DimensionError("cohort: view rows not aligned with patient ids");
    survival().validate();
}

std::optional<int> parse_status(std::string_view raw) {
    if (is_missing(raw)) return std::nullopt;
    std::string s;
    for (char c : raw) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "alive" || s == "0" || s == "censored") return 0;
    if (s == "dead" || s == "deceased" || s == "1") return 1;
    throw std::invalid_argument("unrecognized status value '" + std::string(raw) + "'");
}

Cohort load_cohort(const CohortPaths& paths) {
    if (paths.modalities.empty()) throw std::invalid_argument("load_cohort: no omics files");

    struct Clinical {
        double t;
        int e;
    };
    std::map<std::string, Clinical> clinical;
    {
        const auto tab = read_csv(paths.clinical);
        const std::size_t id_col = column_index(tab, "patient_id", paths.clinical);
        const std::size_t t_col = column_index(tab, "overall_survival", paths.clinical);
        const std::size_t e_col = column_index(tab, "status", paths.clinical);
        for (std::size_t r = 0; r < tab.rows.size(); ++r) {
            const auto& row = tab.rows[r];
            const std::string where = paths.clinical.string() + ":" + std::to_string(tab.line_numbers[r]);
            if (is_missing(row[t_col]) || is_missing(row[e_col])) continue;
            const auto t = parse_double(row[t_col]);
            if (!t || *t < 0.0) throw std::runtime_error(where + ": unparseable overall_survival '" + row[t_col] + "'");
            std::optional<int> e;
            try {
                e = parse_status(row[e_col]);
            } catch (const std::invalid_argument& ex) {
                throw std::runtime_error(where + ": " + ex.what());
            }
            if (!clinical.emplace(row[id_col], Clinical{*t, *e}).second)
                throw std::runtime_error(where + ": duplicate patient_id " + row[id_col]);
        }
    }

    struct View {
        std::vector<std::string> features;
        std::map<std::string, std::vector<double>> rows;
    };
    std::vector<View> views;
    for (const auto& mf : paths.modalities) {
        const auto tab = read_csv(mf.path);
        if (tab.header.size() < 2) throw std::runtime_error(mf.path.string() + ": no feature columns");
        View v;
        v.features.assign(tab.header.begin() + 1, tab.header.end());
        std::set<std::string> seen;
        for (std::size_t r = 0; r < tab.rows.size(); ++r) {
            const auto& row = tab.rows[r];
            if (!seen.insert(row[0]).second)
                throw std::runtime_error(mf.path.string() + ":" + std::to_string(tab.line_numbers[r]) +
                                         ": duplicate patient_id " + row[0]);
            std::vector<double> vals;
            vals.reserve(row.size() - 1);
            bool complete = true;
            for (std::size_t c = 1; c < row.size(); ++c) {
                if (is_missing(row[c])) {
                    complete = false;
                    break;
                }
                const auto x = parse_double(row[c]);
                if (!x)
                    throw std::runtime_error(mf.path.string() + ":" + std::to_string(tab.line_numbers[r]) +
                                             ": unparseable value '" + row[c] + "'");
                vals.push_back(*x);
            }
            if (complete) v.rows.emplace(row[0], std::move(vals));
        }
        views.push_back(std::move(v));
    }

    std::map<std::string, std::string> subtypes;
    if (paths.subtypes) {
        const auto tab = read_csv(*paths.subtypes);
        const std::size_t id_col = column_index(tab, "patient_id", *paths.subtypes);
        const std::size_t s_col = column_index(tab, "subtype", *paths.subtypes);
        for (const auto& row : tab.rows)
            subtypes[row[id_col]] = is_missing(row[s_col]) ? "Unknown" : row[s_col];
    }

    // std::map iteration gives sorted patient ids.
    Cohort c;
    for (const auto& mf : paths.modalities) c.modality_names.push_back(mf.name);
    for (const auto& v : views) c.feature_names.push_back(v.features);
    std::vector<std::vector<double>> flat(views.size());
    for (const auto& [id, clin] : clinical) {
        if (!std::all_of(views.begin(), views.end(), [&](const View& v) { return v.rows.count(id) > 0; })) continue;
        c.patient_ids.push_back(id);
        c.time.push_back(clin.t);
        c.event.push_back(clin.e);
        auto it = subtypes.find(id);
        c.subtype.push_back(it == subtypes.end() ? "Unknown" : it->second);
        for (std::size_t v = 0; v < views.size(); ++v) {
            const auto& vals = views[v].rows.at(id);
            flat[v].insert(flat[v].end(), vals.begin(), vals.end());
        }
    }
    if (c.patient_ids.empty()) throw std::runtime_error("load_cohort: no patient present in every source");
    for (std::size_t v = 0; v < views.size(); ++v)
        c.views.emplace_back(c.patient_ids.size(), views[v].features.size(), std::move(flat[v]));
    c.validate();
    return c;
}

CohortPaths default_paths(const fs::path& dir, std::span<const std::string> modalities) {
    CohortPaths p;
    for (const auto& m : modalities) p.modalities.push_back({m, dir / (m + ".csv")});
    p.clinical = dir / "clinical.csv";
    if (fs::exists(dir / "subtypes.csv")) p.subtypes = dir / "subtypes.csv";
    return p;
}

CohortPaths write_cohort(const fs::path& dir, const Cohort& c) {
    c.validate();
    fs::create_directories(dir);
    for (std::size_t v = 0; v < c.views.size(); ++v) {
        std::ofstream out(dir / (c.modality_names[v] + ".csv"));
        out << "patient_id";
        for (const auto& f : c.feature_names[v]) out << ',' << f;
        out << '\n';
        for (std::size_t r = 0; r < c.size(); ++r) {
            out << c.patient_ids[r];
            for (double x : c.views[v].row(r)) out << ',' << format_double(x);
            out << '\n';
        }
    }
    {
        std::ofstream out(dir / "clinical.csv");
        out << "patient_id,overall_survival,status\n";
        for (std::size_t r = 0; r < c.size(); ++r)
            out << c.patient_ids[r] << ',' << format_double(c.time[r]) << ',' << c.event[r] << '\n';
    }
    {
        std::ofstream out(dir / "subtypes.csv");
        out << "patient_id,subtype\n";
        for (std::size_t r = 0; r < c.size(); ++r) out << c.patient_ids[r] << ',' << c.subtype[r] << '\n';
    }
    return default_paths(dir, c.modality_names);
}

// ---------------------------------------------------------- normalization

Matrix ZScoreParams::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) throw DimensionError("zscore: feature count mismatch");
    Matrix out = x;
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
    return out;
}

ZScoreParams zscore_fit(const Matrix& train, std::span<const std::string> train_ids) {
    if (train.rows() == 0) throw std::invalid_argument("zscore_fit: empty training matrix");
    if (train_ids.size() != train.rows()) throw DimensionError("zscore_fit: id count mismatch");
    ZScoreParams p;
    p.mean = column_means(train);
    p.scale.assign(train.cols(), 0.0);
    for (std::size_t r = 0; r < train.rows(); ++r)
        for (std::size_t c = 0; c < train.cols(); ++c) {
            const double d = train(r, c) - p.mean[c];
            p.scale[c] += d * d;
        }
    for (auto& s : p.scale) {
        s = std::sqrt(s / static_cast<double>(train.rows()));
        if (s < 1e-12) s = 1.0;
    }
    p.fitted_on.assign(train_ids.begin(), train_ids.end());
    return p;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> TimeScale::apply(std::span<const double> t) const {
    std::vector<double> out(t.begin(), t.end());
    for (auto& x : out) x /= scale;
    return out;
}

TimeScale normalize_times(std::span<const double> train_time, std::span<const std::string> train_ids) {
    if (train_time.empty()) throw std::invalid_argument("normalize_times: no times");
    for (double t : train_time)
        if (!(t >= 0.0)) throw std::invalid_argument("normalize_times: negative time");
    std::vector<double> v(train_time.begin(), train_time.end());
    const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
    TimeScale ts;
    ts.scale = iqr > 0.0 && std::isfinite(iqr) ? iqr : 1.0;
    ts.fitted_on.assign(train_ids.begin(), train_ids.end());
    return ts;
}

// ------------------------------------------------------------------ split

void SplitSpec::validate() const {
    if (train <= 0.0 || val < 0.0 || test < 0.0) throw std::invalid_argument("split fractions must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");
}

SplitIndices split(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    if (n < 5) throw std::invalid_argument("split: need at least 5 patients");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = Rng(spec.seed).derive("split");
    rng.shuffle(std::span<std::size_t>(idx));
    // The epsilon absorbs representation error such as 0.2 * 610 = 122.00000000000001.
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test + 1e-9));
    const std::size_t n_train = n - n_val - n_test;
    SplitIndices s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

// -------------------------------------------------------------- synthetic

void SyntheticSpec::validate() const {
    if (n_subtypes < 2) throw std::invalid_argument("synthetic: need at least 2 subtypes");
    if (n_patients < n_subtypes) throw std::invalid_argument("synthetic: fewer patients than subtypes");
    if (latent_dim < 1) throw std::invalid_argument("synthetic: latent_dim must be >= 1");
    if (feature_dims.size() != modality_names.size() || feature_dims.empty())
        throw std::invalid_argument("synthetic: one feature dim per modality required");
    if (hazard_rates.size() != n_subtypes) throw std::invalid_argument("synthetic: one hazard rate per subtype required");
    for (double r : hazard_rates)
        if (!(r > 0.0)) throw std::invalid_argument("synthetic: hazard rates must be > 0");
    if (!(censoring >= 0.0 && censoring < 1.0)) throw std::invalid_argument("synthetic: censoring must be in [0, 1)");
    if (!(noise >= 0.0)) throw std::invalid_argument("synthetic: noise must be >= 0");
}

Cohort generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const Rng root(spec.seed);
    Rng rng_centers = root.derive("synthetic/centers");
    Rng rng_assign = root.derive("synthetic/assign");
    Rng rng_latent = root.derive("synthetic/latent");
    Rng rng_surv = root.derive("synthetic/survival");

    const std::size_t n = spec.n_patients, k = spec.n_subtypes, h = spec.latent_dim;
    Matrix centers(k, h);
    for (auto& v : centers.values()) v = rng_centers.normal();

    // Balanced subtype sizes in random order.
    std::vector<std::size_t> subtype(n);
    for (std::size_t i = 0; i < n; ++i) subtype[i] = i % k;
    rng_assign.shuffle(std::span<std::size_t>(subtype));

    Matrix latent(n, h);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < h; ++c) latent(i, c) = centers(subtype[i], c) + spec.noise * rng_latent.normal();

    Cohort co;
    co.modality_names = spec.modality_names;
    const double a_scale = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t v = 0; v < spec.modality_names.size(); ++v) {
        Rng rng_map = root.derive("synthetic/map/" + spec.modality_names[v]);
        Rng rng_feat = root.derive("synthetic/noise/" + spec.modality_names[v]);
        Matrix a(h, spec.feature_dims[v]);
        for (auto& x : a.values()) x = a_scale * rng_map.normal();
        Matrix x = matmul(latent, a);
        for (auto& val : x.values()) val += spec.noise * rng_feat.normal();
        co.views.push_back(std::move(x));
        std::vector<std::string> names;
        for (std::size_t f = 0; f < spec.feature_dims[v]; ++f)
            names.push_back(spec.modality_names[v] + "_" + std::to_string(f));
        co.feature_names.push_back(std::move(names));
    }

    const int width = static_cast<int>(std::to_string(n).size());
    for (std::size_t i = 0; i < n; ++i) {
        std::string num = std::to_string(i);
        co.patient_ids.push_back("P" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0') + num);
        double t = rng_surv.exponential(spec.hazard_rates[subtype[i]]);
        int e = 1;
        if (rng_surv.uniform() < spec.censoring) {
            t = rng_surv.uniform(0.0, t);
            e = 0;
        }
        co.time.push_back(t);
        co.event.push_back(e);
        co.subtype.push_back("S" + std::to_string(subtype[i]));
    }
    co.validate();
    return co;
}

}  // namespace omicscl::data
