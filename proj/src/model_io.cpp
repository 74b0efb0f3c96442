#include "looaudit/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "looaudit/errors.hpp"
#include "looaudit/hash.hpp"

static_assert(std::endian::native == std::endian::little,
              "model format is little-endian; big-endian hosts are unsupported");

namespace looaudit {
namespace {

constexpr char kMagic[4] = {'L', 'O', 'O', 'A'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
    std::vector<unsigned char> bytes;
    void raw(const void* p, std::size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void f64s(const double* p, std::size_t n) { raw(p, n * 8); }
};

struct Reader {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;
    void raw(void* p, std::size_t n) {
        if (pos + n > bytes.size()) {
            throw ArgumentError("model data truncated");
        }
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    }
    std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
    double f64() { double v; raw(&v, 8); return v; }
};

std::uint8_t kind_tag(RuleKind kind) {
    return static_cast<std::uint8_t>(kind);
}

void write_params(Writer& w, const MlpParams& params) {
    w.u32(static_cast<std::uint32_t>(params.layer_dims.size()));
    for (int d : params.layer_dims) {
        w.u32(static_cast<std::uint32_t>(d));
    }
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        w.f64s(params.weights[l].data(), params.weights[l].size());
        w.f64s(params.biases[l].data(), params.biases[l].size());
    }
}

MlpParams read_params(Reader& r) {
    MlpParams params;
    std::uint32_t n = r.u32();
    if (n < 2 || n > 64) {
        throw ArgumentError("model data: bad layer count");
    }
    params.layer_dims.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        params.layer_dims[i] = static_cast<int>(r.u32());
    }
    for (std::uint32_t l = 0; l + 1 < n; ++l) {
        std::size_t rows = static_cast<std::size_t>(params.layer_dims[l + 1]);
        std::size_t cols = static_cast<std::size_t>(params.layer_dims[l]);
        Matrix w(rows, cols);
        r.raw(w.data(), rows * cols * 8);
        params.weights.push_back(std::move(w));
        std::vector<double> b(rows);
        r.raw(b.data(), rows * 8);
        params.biases.push_back(std::move(b));
    }
    return params;
}

}  // namespace

std::vector<unsigned char> serialize_model(const Model& model) {
    Writer w;
    w.raw(kMagic, 4);
    w.u32(kVersion);
    w.u8(kind_tag(model.kind));
    w.u32(static_cast<std::uint32_t>(model.num_classes));
    switch (model.kind) {
        case RuleKind::standard_mlp:
        case RuleKind::linear:
        case RuleKind::pgd_adversarial:
        case RuleKind::trades:
            write_params(w, model.params);
            break;
        case RuleKind::knn:
            w.u32(static_cast<std::uint32_t>(model.k));
            w.u64(model.train_features.rows());
            w.u64(model.train_features.cols());
            w.f64s(model.train_features.data(), model.train_features.size());
            for (int label : model.train_labels) {
                w.u32(static_cast<std::uint32_t>(label));
            }
            break;
        case RuleKind::table_rule:
            w.u8(static_cast<std::uint8_t>(model.table_subset_mask));
            break;
        case RuleKind::noisy_majority:
            w.u8(static_cast<std::uint8_t>(model.constant_label));
            break;
    }
    return w.bytes;
}

Model deserialize_model(const std::vector<unsigned char>& bytes) {
    Reader r{bytes};
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw ArgumentError("not a model file (bad magic)");
    }
    if (r.u32() != kVersion) {
        throw ArgumentError("unsupported model format version");
    }
    Model model;
    model.kind = static_cast<RuleKind>(r.u8());
    model.num_classes = static_cast<int>(r.u32());
    switch (model.kind) {
        case RuleKind::standard_mlp:
        case RuleKind::linear:
        case RuleKind::pgd_adversarial:
        case RuleKind::trades:
            model.params = read_params(r);
            break;
        case RuleKind::knn: {
            model.k = static_cast<int>(r.u32());
            std::size_t rows = r.u64();
            std::size_t cols = r.u64();
            Matrix f(rows, cols);
            r.raw(f.data(), rows * cols * 8);
            model.train_features = std::move(f);
            model.train_labels.resize(rows);
            for (std::size_t i = 0; i < rows; ++i) {
                model.train_labels[i] = static_cast<int>(r.u32());
            }
            break;
        }
        case RuleKind::table_rule:
            model.table_subset_mask = r.u8();
            break;
        case RuleKind::noisy_majority:
            model.constant_label = r.u8();
            break;
        default:
            throw ArgumentError("model data: unknown kind tag");
    }
    if (r.pos != bytes.size()) {
        throw ArgumentError("model data has trailing bytes");
    }
    return model;
}

void write_model_file(const std::string& path, const Model& model) {
    std::vector<unsigned char> bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ArgumentError("cannot write model file: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw ArgumentError("short write on model file: " + path);
    }
}

Model read_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot read model file: " + path);
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

std::uint64_t model_digest(const Model& model) {
    std::vector<unsigned char> bytes = serialize_model(model);
    return fnv1a(bytes.data(), bytes.size());
}

}  // namespace looaudit
