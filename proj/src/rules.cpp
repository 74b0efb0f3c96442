#include "looaudit/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "looaudit/attack.hpp"
#include "looaudit/errors.hpp"

namespace looaudit {
namespace {

void format_double(std::ostringstream& out, double v) {
    out.precision(17);
    out << v;
}

void fisher_yates(std::vector<std::size_t>& order, Rng& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(order[i - 1], order[j]);
    }
}

void check_rule(const LearningRule& rule, const DatasetView& view) {
    if (view.size() == 0) {
        throw ConfigError("training view is empty");
    }
    switch (rule.kind) {
        case RuleKind::standard_mlp:
        case RuleKind::pgd_adversarial:
        case RuleKind::trades:
        case RuleKind::linear:
            if (rule.kind == RuleKind::linear && !rule.hidden_dims.empty()) {
                throw ConfigError("linear rule takes no hidden layers");
            }
            if (rule.epochs < 1 || rule.batch_size < 1) {
                throw ConfigError("epochs and batch_size must be positive");
            }
            if (rule.kind == RuleKind::trades && !(rule.trades_beta > 0.0)) {
                throw ConfigError("trades_beta must be positive");
            }
            break;
        case RuleKind::knn:
            if (rule.k < 1 || static_cast<std::size_t>(rule.k) > view.size()) {
                throw ConfigError("k must lie in [1, training size]");
            }
            break;
        case RuleKind::table_rule:
            break;
        case RuleKind::noisy_majority:
            if (!(rule.dp_epsilon > 0.0)) {
                throw ConfigError("dp_epsilon must be positive");
            }
            if (view.dataset->num_classes != 2) {
                throw UnsupportedError("noisy-majority is binary only");
            }
            break;
    }
}

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& order,
                   std::size_t lo, std::size_t hi) {
    Matrix out(hi - lo, x.cols());
    for (std::size_t i = lo; i < hi; ++i) {
        const double* src = x.row_ptr(order[i]);
        double* dst = out.row_ptr(i - lo);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            dst[j] = src[j];
        }
    }
    return out;
}

Model train_mlp_family(const LearningRule& rule, const DatasetView& view) {
    Matrix x = view.gather_features();
    std::vector<int> y = view.gather_labels();
    int num_classes = view.dataset->num_classes;
    int out_dim = (num_classes == 2) ? 1 : num_classes;

    std::vector<int> dims;
    dims.push_back(static_cast<int>(x.cols()));
    if (rule.kind != RuleKind::linear) {
        dims.insert(dims.end(), rule.hidden_dims.begin(), rule.hidden_dims.end());
    }
    dims.push_back(out_dim);

    LossKind loss = (out_dim == 1) ? LossKind::binary_cross_entropy
                                   : LossKind::softmax_cross_entropy;

    Rng init_rng = Rng::derive(rule.seed, Stream::init);
    MlpParams params = init_params(dims, init_rng);
    OptimizerState opt = make_optimizer(rule.optimizer, rule.learning_rate, params);
    Rng shuffle_rng = Rng::derive(rule.seed, Stream::shuffle);
    Rng attack_rng = Rng::derive(rule.seed, Stream::attack);

    std::size_t n = x.rows();
    std::size_t bs = static_cast<std::size_t>(rule.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < rule.epochs; ++epoch) {
        fisher_yates(order, shuffle_rng);
        for (std::size_t lo = 0; lo < n; lo += bs) {
            std::size_t hi = std::min(n, lo + bs);
            Matrix xb = gather_rows(x, order, lo, hi);
            std::vector<int> yb(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                yb[i - lo] = y[order[i]];
            }

            BackwardResult res;
            if (rule.kind == RuleKind::pgd_adversarial) {
                Matrix xadv = pgd_attack_params(params, xb, yb, rule.attack_norm,
                                                rule.attack_radius, rule.attack_steps,
                                                rule.attack_step_size);
                res = backward(params, xadv, yb, loss);
            } else if (rule.kind == RuleKind::trades) {
                Matrix xadv = trades_attack(params, xb, rule.attack_norm,
                                            rule.attack_radius, rule.attack_steps,
                                            rule.attack_step_size, attack_rng);
                res = backward_trades(params, xb, xadv, yb, rule.trades_beta);
            } else {
                res = backward(params, xb, yb, loss);
            }

            if (!std::isfinite(res.loss)) {
                throw TrainingError("training loss is not finite", epoch, opt.step);
            }
            optimizer_step(opt, params, res.grads);
        }
    }

    Model model;
    model.kind = rule.kind;
    model.num_classes = num_classes;
    model.params = std::move(params);
    return model;
}

Model train_table_rule(const DatasetView& view) {
    const Matrix& features = view.dataset->features;
    if (features.cols() != 2) {
        throw ArgumentError("table rule expects 2-feature points");
    }
    unsigned mask = 0;
    for (std::size_t row : view.rows) {
        double px = features.at(row, 0);
        double py = features.at(row, 1);
        int which = -1;
        for (int p = 0; p < 3; ++p) {
            if (px == table::kPoints[p][0] && py == table::kPoints[p][1]) {
                which = p;
                break;
            }
        }
        if (which < 0) {
            throw ArgumentError("table rule trained on a point outside its support");
        }
        mask |= 1u << which;
    }
    Model model;
    model.kind = RuleKind::table_rule;
    model.num_classes = 2;
    model.table_subset_mask = mask;
    return model;
}

Model train_noisy_majority(const LearningRule& rule, const DatasetView& view, Rng& rng) {
    long count = 0;
    for (int label : view.gather_labels()) {
        count += (label == 1) ? 1 : -1;
    }
    // Signed count has sensitivity 2 under remove-one adjacency, so
    // Laplace(2/eps) noise gives (eps, 0)-DP.
    double noisy = static_cast<double>(count) + rng.next_laplace(2.0 / rule.dp_epsilon);
    Model model;
    model.kind = RuleKind::noisy_majority;
    model.num_classes = 2;
    model.constant_label = (noisy >= 0.0) ? 1 : 0;
    return model;
}

Model train_knn(const LearningRule& rule, const DatasetView& view) {
    Model model;
    model.kind = RuleKind::knn;
    model.num_classes = view.dataset->num_classes;
    model.k = rule.k;
    model.train_features = view.gather_features();
    model.train_labels = view.gather_labels();
    return model;
}

}  // namespace

namespace table {

// Classifier per distinct-point subset; bit p of the mask marks point p+1.
// Chosen so every point's own 0-1 loss is unchanged by its own removal at
// every sub-multiset, while removing x3 from the full set flips x2.
int predict(unsigned subset_mask, double px) {
    switch (subset_mask) {
        case 0b111:
            return px >= 1.5 ? 1 : 0;
        case 0b011:  // {x1, x2}
            return 1;
        case 0b101:  // {x1, x3}
        case 0b110:  // {x2, x3}
            return 0;
        case 0b001:  // {x1}
            return (px >= 0.5 && px < 1.5) ? 1 : 0;
        case 0b010:  // {x2}
            return px < 0.5 ? 1 : 0;
        case 0b100:  // {x3}
        case 0b000:
            return px >= 1.5 ? 1 : 0;
        default:
            throw ArgumentError("table rule: unknown training subset");
    }
}

}  // namespace table

std::string rule_kind_name(RuleKind kind) {
    switch (kind) {
        case RuleKind::standard_mlp: return "standard-mlp";
        case RuleKind::linear: return "linear";
        case RuleKind::pgd_adversarial: return "pgd-adversarial";
        case RuleKind::trades: return "trades";
        case RuleKind::knn: return "knn";
        case RuleKind::table_rule: return "table-rule";
        case RuleKind::noisy_majority: return "noisy-majority";
    }
    return "unknown";
}

std::string LearningRule::canonical() const {
    std::ostringstream out;
    out << rule_kind_name(kind) << "|hidden=";
    for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
        out << (i ? "," : "") << hidden_dims[i];
    }
    out << "|epochs=" << epochs << "|batch=" << batch_size
        << "|opt=" << (optimizer == OptimizerKind::adam ? "adam" : "sgd") << "|lr=";
    format_double(out, learning_rate);
    out << "|norm=" << (attack_norm == AttackNorm::l2 ? "l2" : "linf") << "|radius=";
    format_double(out, attack_radius);
    out << "|steps=" << attack_steps << "|step_size=";
    format_double(out, attack_step_size);
    out << "|beta=";
    format_double(out, trades_beta);
    out << "|k=" << k << "|dp_eps=";
    format_double(out, dp_epsilon);
    out << "|seed=" << seed;
    return out.str();
}

Matrix Model::predict_proba(const Matrix& x) const {
    switch (kind) {
        case RuleKind::standard_mlp:
        case RuleKind::linear:
        case RuleKind::pgd_adversarial:
        case RuleKind::trades:
            return forward(params, x);
        case RuleKind::knn: {
            std::size_t n = train_features.rows();
            std::size_t kk = static_cast<std::size_t>(k);
            Matrix out(x.rows(), num_classes == 2 ? 1 : num_classes);
            std::vector<std::pair<double, std::size_t>> dist(n);
            for (std::size_t q = 0; q < x.rows(); ++q) {
                const double* xe = x.row_ptr(q);
                for (std::size_t t = 0; t < n; ++t) {
                    const double* tr = train_features.row_ptr(t);
                    double ss = 0.0;
                    for (std::size_t j = 0; j < x.cols(); ++j) {
                        double d = xe[j] - tr[j];
                        ss += d * d;
                    }
                    dist[t] = {ss, t};
                }
                // Ties on distance resolve to the lowest training index.
                std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
                std::vector<double> votes(static_cast<std::size_t>(num_classes), 0.0);
                for (std::size_t t = 0; t < kk; ++t) {
                    votes[static_cast<std::size_t>(train_labels[dist[t].second])] += 1.0;
                }
                if (num_classes == 2) {
                    out.at(q, 0) = votes[1] / static_cast<double>(kk);
                } else {
                    for (int c = 0; c < num_classes; ++c) {
                        out.at(q, static_cast<std::size_t>(c)) =
                            votes[static_cast<std::size_t>(c)] / static_cast<double>(kk);
                    }
                }
            }
            return out;
        }
        case RuleKind::table_rule: {
            if (x.cols() != 2) {
                throw DimensionError("table rule expects 2-feature queries");
            }
            Matrix out(x.rows(), 1);
            for (std::size_t q = 0; q < x.rows(); ++q) {
                out.at(q, 0) = static_cast<double>(table::predict(table_subset_mask, x.at(q, 0)));
            }
            return out;
        }
        case RuleKind::noisy_majority: {
            Matrix out(x.rows(), 1);
            for (std::size_t q = 0; q < x.rows(); ++q) {
                out.at(q, 0) = static_cast<double>(constant_label);
            }
            return out;
        }
    }
    throw UnsupportedError("unknown model kind");
}

std::vector<int> Model::predict_labels(const Matrix& x) const {
    return probs_to_labels(predict_proba(x));
}

Model train(const LearningRule& rule, const DatasetView& view) {
    Rng rng = Rng::derive(rule.seed, Stream::noise);
    return train_with_rng(rule, view, rng);
}

Model train_with_rng(const LearningRule& rule, const DatasetView& view, Rng& rng) {
    check_rule(rule, view);
    switch (rule.kind) {
        case RuleKind::standard_mlp:
        case RuleKind::linear:
        case RuleKind::pgd_adversarial:
        case RuleKind::trades:
            return train_mlp_family(rule, view);
        case RuleKind::knn:
            return train_knn(rule, view);
        case RuleKind::table_rule:
            return train_table_rule(view);
        case RuleKind::noisy_majority:
            return train_noisy_majority(rule, view, rng);
    }
    throw UnsupportedError("unknown rule kind");
}

double adversarial_radius(const DatasetView& view, AttackNorm norm) {
    Matrix x = view.gather_features();
    std::vector<int> y = view.gather_labels();
    std::vector<double> cross;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = i + 1; j < x.rows(); ++j) {
            if (y[i] == y[j]) {
                continue;
            }
            double d = 0.0;
            if (norm == AttackNorm::l2) {
                double ss = 0.0;
                for (std::size_t c = 0; c < x.cols(); ++c) {
                    double t = x.at(i, c) - x.at(j, c);
                    ss += t * t;
                }
                d = std::sqrt(ss);
            } else {
                for (std::size_t c = 0; c < x.cols(); ++c) {
                    d = std::max(d, std::abs(x.at(i, c) - x.at(j, c)));
                }
            }
            cross.push_back(d);
        }
    }
    if (cross.empty()) {
        throw ConfigError("adversarial radius needs points from two classes");
    }
    std::sort(cross.begin(), cross.end());
    if (cross.front() > 0.0) {
        return cross.front();
    }
    // Minimum is 0 (coincident cross-class points): fall back to a distance
    // below over 99% of the cross-class pairs. On small samples that index
    // can still land on a zero; a radius must be positive to be usable, so
    // floor at half the smallest positive distance.
    double percentile = cross[cross.size() / 100];
    if (percentile > 0.0) {
        return percentile;
    }
    for (double d : cross) {
        if (d > 0.0) {
            return d / 2.0;
        }
    }
    throw ConfigError("every cross-class pair coincides; no usable attack radius");
}

}  // namespace looaudit
