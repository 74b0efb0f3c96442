#include "looaudit/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "looaudit/errors.hpp"
#include "looaudit/hash.hpp"

namespace looaudit {

namespace {

struct Value {
    enum class Kind { string, number, boolean, array };
    Kind kind = Kind::string;
    std::string text;
    double number = 0.0;
    bool flag = false;
    std::vector<Value> items;
};

struct Entry {
    Value value;
    int line = 0;
    bool used = false;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

Value parse_value(const std::string& raw, int line, const std::string& origin);

Value parse_scalar(const std::string& raw, int line, const std::string& origin) {
    Value v;
    if (raw.size() >= 2 && raw.front() == '"') {
        if (raw.back() != '"' || raw.size() < 2)
            fail(origin, line, "unterminated string " + raw);
        std::string body = raw.substr(1, raw.size() - 2);
        if (body.find('"') != std::string::npos)
            fail(origin, line, "stray quote inside string " + raw);
        v.kind = Value::Kind::string;
        v.text = body;
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = Value::Kind::boolean;
        v.flag = raw == "true";
        return v;
    }
    double num = 0.0;
    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(first, last, num);
    if (ec != std::errc() || ptr != last)
        fail(origin, line, "cannot parse value '" + raw + "'");
    v.kind = Value::Kind::number;
    v.number = num;
    return v;
}

Value parse_value(const std::string& raw, int line, const std::string& origin) {
    if (raw.empty()) fail(origin, line, "missing value");
    if (raw.front() != '[') return parse_scalar(raw, line, origin);
    if (raw.back() != ']') fail(origin, line, "unterminated array " + raw);

    Value v;
    v.kind = Value::Kind::array;
    std::string body = raw.substr(1, raw.size() - 2);
    // Split on commas at bracket depth zero; elements may be nested arrays.
    int depth = 0;
    bool in_string = false;
    std::string cur;
    auto flush = [&](bool last_piece) {
        std::string piece = trim(cur);
        cur.clear();
        if (piece.empty()) {
            if (last_piece && v.items.empty()) return;  // empty array
            fail(origin, line, "empty array element in " + raw);
        }
        v.items.push_back(parse_value(piece, line, origin));
    };
    for (char c : body) {
        if (c == '"') in_string = !in_string;
        if (!in_string) {
            if (c == '[') ++depth;
            if (c == ']') --depth;
            if (c == ',' && depth == 0) {
                flush(false);
                continue;
            }
        }
        cur.push_back(c);
    }
    if (in_string || depth != 0) fail(origin, line, "unbalanced array " + raw);
    flush(true);
    return v;
}

const char* kind_name(Value::Kind kind) {
    switch (kind) {
        case Value::Kind::string: return "string";
        case Value::Kind::number: return "number";
        case Value::Kind::boolean: return "boolean";
        case Value::Kind::array: return "array";
    }
    return "?";
}

// Parsed key/value store plus typed accessors. Every lookup marks the entry
// used; leftover entries are reported as unknown keys afterwards.
class Table {
   public:
    Table(std::map<std::string, Entry> entries, std::map<std::string, int> sections,
          std::string origin)
        : entries_(std::move(entries)), sections_(std::move(sections)), origin_(std::move(origin)) {}

    bool has_section(const std::string& section) const { return sections_.count(section) > 0; }
    const std::map<std::string, int>& sections() const { return sections_; }

    bool has(const std::string& section, const std::string& key) const {
        return entries_.count(section + "/" + key) > 0;
    }

    const Value* find(const std::string& section, const std::string& key) {
        auto it = entries_.find(section + "/" + key);
        if (it == entries_.end()) return nullptr;
        it->second.used = true;
        last_line_ = it->second.line;
        return &it->second.value;
    }

    [[noreturn]] void fail_key(const std::string& section, const std::string& key,
                               const std::string& what) const {
        std::string where = section.empty() ? key : section + "." + key;
        fail(origin_, last_line_, "key '" + where + "': " + what);
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) {
        const Value* v = find(section, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::string)
            fail_key(section, key, std::string("expected a string, got ") + kind_name(v->kind));
        return v->text;
    }

    double get_number(const std::string& section, const std::string& key, double fallback) {
        const Value* v = find(section, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::number)
            fail_key(section, key, std::string("expected a number, got ") + kind_name(v->kind));
        return v->number;
    }

    long long get_int(const std::string& section, const std::string& key, long long fallback) {
        const Value* v = find(section, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::number || std::floor(v->number) != v->number ||
            std::abs(v->number) > 9.007199254740992e15)
            fail_key(section, key, "expected an integer");
        return static_cast<long long>(v->number);
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) {
        const Value* v = find(section, key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::boolean)
            fail_key(section, key, std::string("expected a boolean, got ") + kind_name(v->kind));
        return v->flag;
    }

    std::vector<Value> get_array(const std::string& section, const std::string& key) {
        const Value* v = find(section, key);
        if (!v) return {};
        if (v->kind != Value::Kind::array)
            fail_key(section, key, std::string("expected an array, got ") + kind_name(v->kind));
        return v->items;
    }

    void reject_unused() const {
        for (const auto& [full, entry] : entries_) {
            if (entry.used) continue;
            std::size_t slash = full.find('/');
            std::string section = full.substr(0, slash);
            std::string key = full.substr(slash + 1);
            std::string shown = section.empty() ? key : section + "." + key;
            fail(origin_, entry.line, "unknown key '" + shown + "'");
        }
    }

    const std::string& origin() const { return origin_; }

   private:
    std::map<std::string, Entry> entries_;
    std::map<std::string, int> sections_;  // name -> first line
    std::string origin_;
    int last_line_ = 0;
};

Table scan(const std::string& text, const std::string& origin) {
    std::map<std::string, Entry> entries;
    std::map<std::string, int> sections;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Cut comments, respecting string literals.
        bool in_string = false;
        std::size_t cut = line.size();
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '#' && !in_string) {
                cut = i;
                break;
            }
        }
        std::string body = trim(line.substr(0, cut));
        if (body.empty()) continue;

        if (body.front() == '[') {
            if (body.back() != ']') fail(origin, lineno, "unterminated section header " + body);
            std::string name = trim(body.substr(1, body.size() - 2));
            if (!valid_name(name)) fail(origin, lineno, "invalid section name [" + name + "]");
            if (sections.count(name))
                fail(origin, lineno,
                     "duplicate section [" + name + "] (first at line " +
                         std::to_string(sections[name]) + ")");
            sections.emplace(name, lineno);
            section = name;
            continue;
        }

        std::size_t eq = std::string::npos;
        in_string = false;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (body[i] == '"') in_string = !in_string;
            if (body[i] == '=' && !in_string) {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos) fail(origin, lineno, "expected key = value, got '" + body + "'");
        std::string key = trim(body.substr(0, eq));
        std::string raw = trim(body.substr(eq + 1));
        if (!valid_name(key)) fail(origin, lineno, "invalid key '" + key + "'");
        std::string full = section + "/" + key;
        auto it = entries.find(full);
        if (it != entries.end())
            fail(origin, lineno,
                 "duplicate key '" + key + "' (first at line " + std::to_string(it->second.line) +
                     ")");
        Entry entry;
        entry.value = parse_value(raw, lineno, origin);
        entry.line = lineno;
        entries.emplace(full, entry);
    }
    return Table(std::move(entries), std::move(sections), origin);
}

AuditMode parse_mode(Table& t) {
    std::string name = t.get_string("", "mode", "luf");
    if (name == "luf") return AuditMode::luf;
    if (name == "luf-randomized") return AuditMode::luf_randomized;
    if (name == "stability") return AuditMode::stability;
    if (name == "seed-instability") return AuditMode::seed_instability;
    if (name == "arch-instability") return AuditMode::arch_instability;
    if (name == "scenario") return AuditMode::scenario;
    if (name == "boundary") return AuditMode::boundary;
    if (name == "smooth-audit") return AuditMode::smooth_audit;
    t.fail_key("", "mode", "unknown mode \"" + name + "\"");
}

ColumnKind parse_column_kind(Table& t, const std::string& section, const std::string& key,
                             const std::string& name) {
    if (name == "standardize") return ColumnKind::standardize;
    if (name == "min-max") return ColumnKind::min_max;
    if (name == "one-hot") return ColumnKind::one_hot;
    if (name == "passthrough") return ColumnKind::passthrough;
    t.fail_key(section, key, "unknown preprocessing kind \"" + name + "\"");
}

void read_dataset(Table& t, AuditConfig& cfg) {
    std::string kind = t.get_string("dataset", "kind", "synthetic");
    if (kind == "synthetic") {
        cfg.synthetic = true;
    } else if (kind == "csv") {
        cfg.synthetic = false;
    } else {
        t.fail_key("dataset", "kind", "expected \"synthetic\" or \"csv\"");
    }

    std::string synth = t.get_string("dataset", "synthetic", "two-circles");
    if (synth == "uniform-bernoulli-square") {
        cfg.synth.kind = SyntheticKind::uniform_bernoulli_square;
    } else if (synth == "two-circles") {
        cfg.synth.kind = SyntheticKind::two_circles;
    } else if (synth == "gaussian-blobs") {
        cfg.synth.kind = SyntheticKind::gaussian_blobs;
    } else {
        t.fail_key("dataset", "synthetic", "unknown synthetic dataset \"" + synth + "\"");
    }

    long long n = t.get_int("dataset", "n", static_cast<long long>(cfg.synth.n));
    if (n < 1) t.fail_key("dataset", "n", "must be at least 1");
    cfg.synth.n = static_cast<std::size_t>(n);
    cfg.synth.label_probability =
        t.get_number("dataset", "label_probability", cfg.synth.label_probability);
    cfg.synth.diameter = t.get_number("dataset", "diameter", cfg.synth.diameter);
    if (cfg.synth.diameter <= 0.0) t.fail_key("dataset", "diameter", "must be positive");
    cfg.synth.stddev = t.get_number("dataset", "stddev", cfg.synth.stddev);
    cfg.synth.seed = static_cast<std::uint64_t>(t.get_int("dataset", "seed", 0));

    for (const Value& mean : t.get_array("dataset", "means")) {
        if (mean.kind != Value::Kind::array)
            t.fail_key("dataset", "means", "expected an array of per-class arrays");
        std::vector<double> coords;
        for (const Value& c : mean.items) {
            if (c.kind != Value::Kind::number)
                t.fail_key("dataset", "means", "mean coordinates must be numbers");
            coords.push_back(c.number);
        }
        cfg.synth.means.push_back(std::move(coords));
    }

    cfg.csv_path = t.get_string("dataset", "path", "");
    cfg.label_column = t.get_string("dataset", "label_column", "label");
    if (!cfg.synthetic && cfg.csv_path.empty())
        throw ConfigError(t.origin() + ": dataset.path is required when dataset.kind is \"csv\"");
    if (cfg.synthetic && !cfg.csv_path.empty())
        throw ConfigError(t.origin() + ": dataset.path requires dataset.kind \"csv\"");
}

void read_preprocess(Table& t, AuditConfig& cfg) {
    cfg.preprocess.default_kind =
        parse_column_kind(t, "preprocess", "default", t.get_string("preprocess", "default", "standardize"));
    std::string policy = t.get_string("preprocess", "unknown_category", "zeros-with-warning");
    if (policy == "zeros-with-warning") {
        cfg.preprocess.unknown_policy = UnknownCategoryPolicy::zeros_with_warning;
    } else if (policy == "error") {
        cfg.preprocess.unknown_policy = UnknownCategoryPolicy::error;
    } else {
        t.fail_key("preprocess", "unknown_category",
                   "expected \"zeros-with-warning\" or \"error\"");
    }
    for (const Value& item : t.get_array("preprocess", "overrides")) {
        if (item.kind != Value::Kind::string)
            t.fail_key("preprocess", "overrides", "expected \"column:kind\" strings");
        std::size_t colon = item.text.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == item.text.size())
            t.fail_key("preprocess", "overrides",
                       "expected \"column:kind\", got \"" + item.text + "\"");
        std::string column = item.text.substr(0, colon);
        std::string kind = item.text.substr(colon + 1);
        if (cfg.preprocess.overrides.count(column))
            t.fail_key("preprocess", "overrides", "column \"" + column + "\" listed twice");
        cfg.preprocess.overrides[column] = parse_column_kind(t, "preprocess", "overrides", kind);
    }
}

void read_split(Table& t, AuditConfig& cfg) {
    cfg.train_fraction = t.get_number("split", "train_fraction", cfg.train_fraction);
    if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0))
        t.fail_key("split", "train_fraction", "must lie strictly between 0 and 1");
    long long o_size = t.get_int("split", "o_size", 0);
    if (o_size < 0) t.fail_key("split", "o_size", "must be non-negative");
    cfg.o_size = static_cast<std::size_t>(o_size);
    cfg.split_seed = static_cast<std::uint64_t>(t.get_int("split", "seed", 0));
    std::string source = t.get_string("split", "o_source", "train");
    if (source == "train") {
        cfg.o_source = LeaveOutSource::train;
    } else if (source == "test") {
        cfg.o_source = LeaveOutSource::test;
    } else {
        t.fail_key("split", "o_source", "expected \"train\" or \"test\"");
    }

    if (cfg.synthetic && cfg.o_size > 0) {
        std::size_t n = cfg.synth.n;
        std::size_t n_train = static_cast<std::size_t>(
            std::floor(static_cast<double>(n) * cfg.train_fraction));
        std::size_t cap =
            cfg.o_source == LeaveOutSource::train ? n_train : n - n_train;
        if (cfg.o_size > cap)
            throw ConfigError(t.origin() + ": split.o_size = " + std::to_string(cfg.o_size) +
                              " exceeds the " + std::to_string(cap) +
                              " points available from split.o_source");
    }
}

LearningRule read_rule(Table& t, const std::string& section) {
    LearningRule rule;
    std::string kind = t.get_string(section, "kind", "standard-mlp");
    if (kind == "standard-mlp") {
        rule.kind = RuleKind::standard_mlp;
    } else if (kind == "linear") {
        rule.kind = RuleKind::linear;
    } else if (kind == "pgd-adversarial") {
        rule.kind = RuleKind::pgd_adversarial;
    } else if (kind == "trades") {
        rule.kind = RuleKind::trades;
    } else if (kind == "knn") {
        rule.kind = RuleKind::knn;
    } else if (kind == "table-rule") {
        rule.kind = RuleKind::table_rule;
    } else if (kind == "noisy-majority") {
        rule.kind = RuleKind::noisy_majority;
    } else {
        t.fail_key(section, "kind", "unknown learning rule \"" + kind + "\"");
    }

    for (const Value& v : t.get_array(section, "hidden")) {
        if (v.kind != Value::Kind::number || std::floor(v.number) != v.number || v.number < 1)
            t.fail_key(section, "hidden", "expected positive integer widths");
        rule.hidden_dims.push_back(static_cast<int>(v.number));
    }
    rule.epochs = static_cast<int>(t.get_int(section, "epochs", rule.epochs));
    if (rule.epochs < 1) t.fail_key(section, "epochs", "must be at least 1");
    rule.batch_size = static_cast<int>(t.get_int(section, "batch_size", rule.batch_size));
    if (rule.batch_size < 1) t.fail_key(section, "batch_size", "must be at least 1");

    std::string opt = t.get_string(section, "optimizer", "adam");
    if (opt == "adam") {
        rule.optimizer = OptimizerKind::adam;
    } else if (opt == "sgd") {
        rule.optimizer = OptimizerKind::sgd;
    } else {
        t.fail_key(section, "optimizer", "expected \"adam\" or \"sgd\"");
    }
    rule.learning_rate = t.get_number(section, "learning_rate", rule.learning_rate);
    if (!(rule.learning_rate > 0.0)) t.fail_key(section, "learning_rate", "must be positive");

    std::string norm = t.get_string(section, "attack_norm", "l2");
    if (norm == "l2") {
        rule.attack_norm = AttackNorm::l2;
    } else if (norm == "linf") {
        rule.attack_norm = AttackNorm::linf;
    } else {
        t.fail_key(section, "attack_norm", "expected \"l2\" or \"linf\"");
    }
    rule.attack_radius = t.get_number(section, "attack_radius", rule.attack_radius);
    if (!(rule.attack_radius >= 0.0) || !std::isfinite(rule.attack_radius))
        t.fail_key(section, "attack_radius", "must be finite and non-negative");
    rule.attack_steps = static_cast<int>(t.get_int(section, "attack_steps", rule.attack_steps));
    if (rule.attack_steps < 1) t.fail_key(section, "attack_steps", "must be at least 1");
    rule.attack_step_size = t.get_number(section, "attack_step_size", rule.attack_step_size);
    if (rule.attack_step_size < 0.0) t.fail_key(section, "attack_step_size", "must be non-negative");

    rule.trades_beta = t.get_number(section, "trades_beta", rule.trades_beta);
    if (!(rule.trades_beta > 0.0)) t.fail_key(section, "trades_beta", "must be positive");
    rule.k = static_cast<int>(t.get_int(section, "k", rule.k));
    if (rule.k < 1) t.fail_key(section, "k", "must be at least 1");
    rule.dp_epsilon = t.get_number(section, "dp_epsilon", rule.dp_epsilon);
    if (!(rule.dp_epsilon > 0.0)) t.fail_key(section, "dp_epsilon", "must be positive");
    rule.seed = static_cast<std::uint64_t>(t.get_int(section, "seed", 0));
    return rule;
}

void read_rules(Table& t, AuditConfig& cfg) {
    std::map<int, std::string> rule_sections;
    for (const auto& [name, line] : t.sections()) {
        if (name == "rule") {
            rule_sections.emplace(1, name);
        } else if (name.rfind("rule.", 0) == 0) {
            std::string idx = name.substr(5);
            int parsed = 0;
            auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), parsed);
            if (ec != std::errc() || ptr != idx.data() + idx.size() || parsed < 2)
                fail(t.origin(), line, "invalid rule section [" + name + "]; use [rule], [rule.2], ...");
            if (rule_sections.count(parsed))
                fail(t.origin(), line, "duplicate rule index in [" + name + "]");
            rule_sections.emplace(parsed, name);
        }
    }
    int expect = 1;
    for (const auto& [idx, name] : rule_sections) {
        if (idx != expect)
            throw ConfigError(t.origin() + ": rule sections must be contiguous; missing [" +
                              (expect == 1 ? std::string("rule")
                                           : "rule." + std::to_string(expect)) +
                              "]");
        ++expect;
        cfg.rules.push_back(read_rule(t, name));
    }
}

void read_audit(Table& t, AuditConfig& cfg) {
    cfg.trials = static_cast<int>(t.get_int("audit", "trials", cfg.trials));
    if (cfg.trials < 1) t.fail_key("audit", "trials", "must be at least 1");
    std::string eval = t.get_string("audit", "eval", "all");
    if (eval == "all") {
        cfg.eval_test_only = false;
    } else if (eval == "test") {
        cfg.eval_test_only = true;
    } else {
        t.fail_key("audit", "eval", "expected \"all\" or \"test\"");
    }
    for (const Value& v : t.get_array("audit", "seeds")) {
        if (v.kind != Value::Kind::number || std::floor(v.number) != v.number || v.number < 0)
            t.fail_key("audit", "seeds", "expected non-negative integer seeds");
        cfg.seeds.push_back(static_cast<std::uint64_t>(v.number));
    }
    cfg.boundary_grid = static_cast<int>(t.get_int("audit", "grid", cfg.boundary_grid));
    if (cfg.boundary_grid < 1) t.fail_key("audit", "grid", "must be at least 1");
    cfg.smoothing_enabled = t.get_bool("audit", "smoothing", false);
}

void read_smoothing(Table& t, AuditConfig& cfg) {
    cfg.smoothing.sigma_squared =
        t.get_number("smoothing", "sigma_squared", cfg.smoothing.sigma_squared);
    if (!(cfg.smoothing.sigma_squared > 0.0))
        t.fail_key("smoothing", "sigma_squared", "must be positive");
    cfg.smoothing.num_samples =
        static_cast<int>(t.get_int("smoothing", "num_samples", cfg.smoothing.num_samples));
    if (cfg.smoothing.num_samples < 1)
        t.fail_key("smoothing", "num_samples", "must be at least 1");
    cfg.smoothing.noise_seed = static_cast<std::uint64_t>(t.get_int("smoothing", "noise_seed", 0));
    std::string pairing = t.get_string("smoothing", "pairing", "common");
    if (pairing == "common") {
        cfg.smoothing.pairing = NoisePairing::common_random_numbers;
    } else if (pairing == "independent") {
        cfg.smoothing.pairing = NoisePairing::independent;
    } else {
        t.fail_key("smoothing", "pairing", "expected \"common\" or \"independent\"");
    }
}

void read_scenario(Table& t, AuditConfig& cfg) {
    cfg.scenario.name = t.get_string("scenario", "name", "");
    cfg.scenario.d = t.get_number("scenario", "d", cfg.scenario.d);
    if (!(cfg.scenario.d > 0.0)) t.fail_key("scenario", "d", "must be positive");
    long long n = t.get_int("scenario", "n", static_cast<long long>(cfg.scenario.n));
    if (n < 1) t.fail_key("scenario", "n", "must be at least 1");
    cfg.scenario.n = static_cast<std::size_t>(n);
    cfg.scenario.grid_resolution =
        static_cast<int>(t.get_int("scenario", "grid", cfg.scenario.grid_resolution));
    if (cfg.scenario.grid_resolution < 1) t.fail_key("scenario", "grid", "must be at least 1");
    cfg.scenario.epsilon = t.get_number("scenario", "epsilon", cfg.scenario.epsilon);
    if (!(cfg.scenario.epsilon > 0.0)) t.fail_key("scenario", "epsilon", "must be positive");
    cfg.scenario.trials = static_cast<int>(t.get_int("scenario", "trials", cfg.scenario.trials));
    if (cfg.scenario.trials < 1) t.fail_key("scenario", "trials", "must be at least 1");
    cfg.scenario.seed = static_cast<std::uint64_t>(t.get_int("scenario", "seed", 0));
    std::vector<Value> layers = t.get_array("scenario", "layers");
    if (!layers.empty()) {
        cfg.scenario.layer_dims.clear();
        for (const Value& v : layers) {
            if (v.kind != Value::Kind::number || std::floor(v.number) != v.number || v.number < 1)
                t.fail_key("scenario", "layers", "expected positive integer widths");
            cfg.scenario.layer_dims.push_back(static_cast<int>(v.number));
        }
    }
}

void check_sections(const Table& t) {
    for (const auto& [name, line] : t.sections()) {
        bool known = name == "dataset" || name == "preprocess" || name == "split" ||
                     name == "rule" || name.rfind("rule.", 0) == 0 || name == "audit" ||
                     name == "smoothing" || name == "scenario";
        if (!known) fail(t.origin(), line, "unknown section [" + name + "]");
    }
}

void check_semantics(const Table& t, AuditConfig& cfg) {
    const std::string& origin = t.origin();
    bool needs_rule = cfg.mode != AuditMode::scenario;
    if (needs_rule && cfg.rules.empty())
        throw ConfigError(origin + ": mode \"" + audit_mode_name(cfg.mode) +
                          "\" requires a [rule] section");
    if (cfg.mode == AuditMode::arch_instability) {
        if (cfg.rules.size() < 2)
            throw ConfigError(origin +
                              ": mode \"arch-instability\" requires at least two rule sections");
    } else if (cfg.rules.size() > 1) {
        throw ConfigError(origin + ": mode \"" + audit_mode_name(cfg.mode) +
                          "\" uses a single [rule] section");
    }
    if (cfg.mode == AuditMode::seed_instability && cfg.seeds.size() < 2)
        throw ConfigError(origin +
                          ": mode \"seed-instability\" requires audit.seeds with at least two seeds");
    if (cfg.mode == AuditMode::luf_randomized && cfg.trials < 2)
        throw ConfigError(origin + ": mode \"luf-randomized\" requires audit.trials >= 2");
    if (cfg.mode == AuditMode::scenario) {
        const std::string& name = cfg.scenario.name;
        if (name != "prop1" && name != "two-circles" && name != "dp-bound" && name != "figure1")
            throw ConfigError(origin + ": scenario.name must be one of \"prop1\", \"two-circles\", "
                                       "\"dp-bound\", \"figure1\"");
    }
    if (cfg.mode == AuditMode::smooth_audit) cfg.smoothing_enabled = true;
    if (cfg.synth.kind == SyntheticKind::gaussian_blobs && cfg.synthetic) {
        if (cfg.mode != AuditMode::scenario && cfg.synth.means.empty())
            throw ConfigError(origin + ": dataset.means is required for gaussian-blobs");
    }
}

void append(std::ostringstream& out, const std::string& key, const std::string& value) {
    out << key << "=" << value << "\n";
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

std::string audit_mode_name(AuditMode mode) {
    switch (mode) {
        case AuditMode::luf: return "luf";
        case AuditMode::luf_randomized: return "luf-randomized";
        case AuditMode::stability: return "stability";
        case AuditMode::seed_instability: return "seed-instability";
        case AuditMode::arch_instability: return "arch-instability";
        case AuditMode::scenario: return "scenario";
        case AuditMode::boundary: return "boundary";
        case AuditMode::smooth_audit: return "smooth-audit";
    }
    throw ArgumentError("unknown audit mode");
}

std::string AuditConfig::canonical() const {
    std::ostringstream out;
    append(out, "mode", audit_mode_name(mode));
    append(out, "synthetic", synthetic ? "1" : "0");
    if (synthetic) {
        append(out, "synth.kind", std::to_string(static_cast<int>(synth.kind)));
        append(out, "synth.n", std::to_string(synth.n));
        append(out, "synth.label_probability", num(synth.label_probability));
        append(out, "synth.diameter", num(synth.diameter));
        append(out, "synth.stddev", num(synth.stddev));
        std::ostringstream means;
        for (const auto& mean : synth.means) {
            means << "[";
            for (double c : mean) means << num(c) << ",";
            means << "]";
        }
        append(out, "synth.means", means.str());
        append(out, "synth.seed", std::to_string(synth.seed));
    } else {
        append(out, "csv.path", csv_path);
        append(out, "csv.label_column", label_column);
        append(out, "preprocess.default", std::to_string(static_cast<int>(preprocess.default_kind)));
        append(out, "preprocess.unknown", std::to_string(static_cast<int>(preprocess.unknown_policy)));
        std::ostringstream overrides;
        for (const auto& [column, kind] : preprocess.overrides)
            overrides << column << ":" << static_cast<int>(kind) << ";";
        append(out, "preprocess.overrides", overrides.str());
    }
    append(out, "split.train_fraction", num(train_fraction));
    append(out, "split.o_size", std::to_string(o_size));
    append(out, "split.seed", std::to_string(split_seed));
    append(out, "split.o_source", o_source == LeaveOutSource::train ? "train" : "test");
    for (std::size_t i = 0; i < rules.size(); ++i)
        append(out, "rule." + std::to_string(i + 1), rules[i].canonical());
    append(out, "audit.trials", std::to_string(trials));
    append(out, "audit.eval", eval_test_only ? "test" : "all");
    std::ostringstream seed_list;
    for (std::uint64_t s : seeds) seed_list << s << ",";
    append(out, "audit.seeds", seed_list.str());
    append(out, "audit.grid", std::to_string(boundary_grid));
    append(out, "audit.smoothing", smoothing_enabled ? "1" : "0");
    if (smoothing_enabled) {
        append(out, "smoothing.sigma_squared", num(smoothing.sigma_squared));
        append(out, "smoothing.num_samples", std::to_string(smoothing.num_samples));
        append(out, "smoothing.noise_seed", std::to_string(smoothing.noise_seed));
        append(out, "smoothing.pairing",
               smoothing.pairing == NoisePairing::common_random_numbers ? "common" : "independent");
    }
    if (mode == AuditMode::scenario) {
        append(out, "scenario.name", scenario.name);
        append(out, "scenario.d", num(scenario.d));
        append(out, "scenario.n", std::to_string(scenario.n));
        append(out, "scenario.grid", std::to_string(scenario.grid_resolution));
        append(out, "scenario.epsilon", num(scenario.epsilon));
        append(out, "scenario.trials", std::to_string(scenario.trials));
        append(out, "scenario.seed", std::to_string(scenario.seed));
        std::ostringstream layers;
        for (int d : scenario.layer_dims) layers << d << ",";
        append(out, "scenario.layers", layers.str());
    }
    return out.str();
}

std::uint64_t AuditConfig::hash() const { return fnv1a(canonical()); }

AuditConfig parse_config_text(const std::string& text, const std::string& origin) {
    Table table = scan(text, origin);
    check_sections(table);

    AuditConfig cfg;
    cfg.mode = parse_mode(table);
    long long parallelism = table.get_int("", "parallelism", 1);
    if (parallelism < 1) table.fail_key("", "parallelism", "must be at least 1");
    cfg.parallelism = static_cast<int>(parallelism);
    cfg.out_dir = table.get_string("", "out", "out");
    cfg.cache_dir = table.get_string("", "cache", "");
    cfg.use_cache = !cfg.cache_dir.empty();

    read_dataset(table, cfg);
    read_preprocess(table, cfg);
    read_split(table, cfg);
    read_rules(table, cfg);
    read_audit(table, cfg);
    read_smoothing(table, cfg);
    read_scenario(table, cfg);
    table.reject_unused();
    check_semantics(table, cfg);
    return cfg;
}

AuditConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

}  // namespace looaudit
