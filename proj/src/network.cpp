#include "subic/network.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "subic/io_util.hpp"
#include "subic/simd/kernels.hpp"

namespace subic {

namespace {

constexpr uint32_t kModelVersion = 1;

void check_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw numeric_error(std::string("non-finite ") + what);
}

void softmax_inplace(std::span<double> u) {
    double mx = u[0];
    for (double v : u) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : u) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : u) v /= sum;
}

double entropy_normalizer(BlockShape shape) {
    return shape.m * std::log2(static_cast<double>(shape.k));
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

void ModelParams::validate() const {
    const size_t width = shape.width();
    if (d < 1 || num_classes < 1) throw dim_error("ModelParams: zero dimension");
    if (w0.size() != static_cast<size_t>(d) * width || b0.size() != width ||
        w1.size() != width * num_classes || b1.size() != num_classes)
        throw dim_error("ModelParams: buffer sizes inconsistent with dimensions");
    if (!all_finite(w0) || !all_finite(b0) || !all_finite(w1) || !all_finite(b1))
        throw numeric_error("ModelParams: non-finite parameter");
}

void Hyperparams::validate() const {
    if (gamma < 0 || mu < 0) throw dim_error("Hyperparams: entropy weights must be non-negative");
    if (!(learning_rate > 0)) throw dim_error("Hyperparams: learning rate must be positive");
    if (momentum < 0 || momentum >= 1) throw dim_error("Hyperparams: momentum must be in [0, 1)");
    if (batch_size < 1) throw dim_error("Hyperparams: batch size must be positive");
}

ModelParams init_params(uint32_t d, BlockShape shape, uint32_t num_classes, uint64_t seed) {
    if (d < 1 || num_classes < 1) throw dim_error("init_params: zero dimension");
    ModelParams p;
    p.shape = shape;
    p.d = d;
    p.num_classes = num_classes;
    const size_t width = shape.width();
    p.w0.resize(static_cast<size_t>(d) * width);
    p.b0.assign(width, 0.0);
    p.w1.resize(width * num_classes);
    p.b1.assign(num_classes, 0.0);

    std::mt19937_64 rng(seed);
    const double lim0 = std::sqrt(6.0 / (static_cast<double>(d) + width));
    std::uniform_real_distribution<double> u0(-lim0, lim0);
    for (double& v : p.w0) v = u0(rng);
    const double lim1 = std::sqrt(6.0 / (static_cast<double>(width) + num_classes));
    std::uniform_real_distribution<double> u1(-lim1, lim1);
    for (double& v : p.w1) v = u1(rng);
    return p;
}

std::vector<double> relu_embedding(std::span<const double> x, const ModelParams& params) {
    if (x.size() != params.d) throw dim_error("forward: feature dimension mismatch");
    check_finite(x, "input feature");
    const size_t width = params.shape.width();
    std::vector<double> a(params.b0);
    for (uint32_t i = 0; i < params.d; ++i)
        simd::axpy(x[i], params.w0.data() + static_cast<size_t>(i) * width, a.data(), width);
    check_finite(a, "encoder activation");
    for (double& v : a) v = std::max(v, 0.0);
    return a;
}

ForwardTrace forward(std::span<const double> x, const ModelParams& params) {
    params.validate();
    ForwardTrace t;
    t.z = relu_embedding(x, params);
    t.soft = block_softmax(t.z, params.shape);

    const size_t width = params.shape.width();
    t.probs = params.b1;
    for (size_t j = 0; j < width; ++j)
        simd::axpy(t.soft.values[j], params.w1.data() + j * params.num_classes, t.probs.data(),
                   params.num_classes);
    check_finite(t.probs, "class score");
    softmax_inplace(t.probs);
    return t;
}

double classification_loss(std::span<const double> probs, uint32_t label) {
    const size_t c = probs.size();
    if (c < 2) throw dim_error("classification_loss: need at least two classes");
    if (label >= c) throw dim_error("classification_loss: label out of range");
    const double p = std::max(probs[label], kProbClamp);
    return -std::log2(p) / std::log2(static_cast<double>(c));
}

LossBreakdown total_loss(std::span<const ForwardTrace> traces, std::span<const uint32_t> labels,
                         double gamma, double mu) {
    if (traces.empty()) throw dim_error("total_loss: empty batch");
    if (traces.size() != labels.size()) throw dim_error("total_loss: label count mismatch");
    if (gamma < 0 || mu < 0) throw dim_error("total_loss: negative entropy weight");

    const BlockShape shape = traces[0].soft.shape;
    const auto t = static_cast<double>(traces.size());
    const double norm = entropy_normalizer(shape);

    LossBreakdown out;
    double entropy_sum = 0.0;
    std::vector<SoftCode> softs;
    softs.reserve(traces.size());
    for (size_t i = 0; i < traces.size(); ++i) {
        if (traces[i].soft.shape != shape) throw dim_error("total_loss: shape mismatch in batch");
        out.cls += classification_loss(traces[i].probs, labels[i]);
        if (traces[i].probs[labels[i]] <= kProbClamp) ++out.clamped;
        entropy_sum += code_entropy(traces[i].soft);
        softs.push_back(traces[i].soft);
    }
    out.cls /= t;
    out.mean_ent = gamma / norm * (entropy_sum / t);
    out.batch_ent = -(mu / norm) * (shape.m * batch_entropy(softs));
    out.total = out.cls + out.mean_ent + out.batch_ent;
    return out;
}

Gradients zeros_like(const ModelParams& params) {
    Gradients g;
    g.w0.assign(params.w0.size(), 0.0);
    g.b0.assign(params.b0.size(), 0.0);
    g.w1.assign(params.w1.size(), 0.0);
    g.b1.assign(params.b1.size(), 0.0);
    return g;
}

Gradients backward_from_traces(std::span<const double> x, std::span<const ForwardTrace> traces,
                               std::span<const uint32_t> labels, const ModelParams& params,
                               double gamma, double mu) {
    const size_t t = traces.size();
    if (t == 0) throw dim_error("backward: empty batch");
    if (labels.size() != t || x.size() != t * params.d)
        throw dim_error("backward: batch size mismatch");
    if (gamma < 0 || mu < 0) throw dim_error("backward: negative entropy weight");

    const BlockShape shape = params.shape;
    const size_t width = shape.width();
    const uint32_t c = params.num_classes;
    const double norm = entropy_normalizer(shape);
    const double gamma_n = gamma / norm;
    const double mu_n = mu / norm;
    const double inv_t = 1.0 / static_cast<double>(t);
    const double ln2 = std::numbers::ln2;
    const double lnc = std::log(static_cast<double>(c));

    // batch-mean relaxed code; every sample couples through it
    std::vector<double> mean_code(width, 0.0);
    for (const ForwardTrace& tr : traces)
        for (size_t j = 0; j < width; ++j) mean_code[j] += tr.soft.values[j];
    for (double& v : mean_code) v *= inv_t;

    Gradients g = zeros_like(params);
    std::vector<double> du(c), g_soft(width), dz(width);

    for (size_t i = 0; i < t; ++i) {
        const ForwardTrace& tr = traces[i];
        const uint32_t y = labels[i];
        if (y >= c) throw dim_error("backward: label out of range");
        const double* xi = x.data() + i * params.d;

        const bool clamped = tr.probs[y] <= kProbClamp;
        for (uint32_t j = 0; j < c; ++j)
            du[j] = clamped ? 0.0 : (tr.probs[j] - (j == y ? 1.0 : 0.0)) * inv_t / lnc;

        for (uint32_t j = 0; j < c; ++j) g.b1[j] += du[j];
        for (size_t j = 0; j < width; ++j) {
            simd::axpy(tr.soft.values[j], du.data(), g.w1.data() + j * c, c);
            g_soft[j] = simd::dot(params.w1.data() + j * c, du.data(), c);
        }

        // chain through the block softmax: dz_j = q_j - p_j * sum_block(q),
        // where q_j = p_j * (upstream gradient at soft_j) with the exact
        // entropy terms folded in; p_j = 0 entries contribute nothing.
        for (uint32_t b = 0; b < shape.m; ++b) {
            const size_t off = static_cast<size_t>(b) * shape.k;
            double qsum = 0.0;
            for (uint32_t j = 0; j < shape.k; ++j) {
                const double p = tr.soft.values[off + j];
                double q = p * g_soft[off + j];
                if (p > 0.0) {
                    q -= gamma_n * inv_t / ln2 * p * (std::log(p) + 1.0);
                    q += mu_n * inv_t / ln2 * p * (std::log(mean_code[off + j]) + 1.0);
                }
                dz[off + j] = q;
                qsum += q;
            }
            for (uint32_t j = 0; j < shape.k; ++j)
                dz[off + j] -= tr.soft.values[off + j] * qsum;
        }

        for (size_t j = 0; j < width; ++j)
            if (tr.z[j] <= 0.0) dz[j] = 0.0;  // relu subgradient, 0 at 0

        for (uint32_t row = 0; row < params.d; ++row)
            simd::axpy(xi[row], dz.data(), g.w0.data() + static_cast<size_t>(row) * width, width);
        for (size_t j = 0; j < width; ++j) g.b0[j] += dz[j];
    }
    return g;
}

Gradients backward(std::span<const double> x, std::span<const uint32_t> labels,
                   const ModelParams& params, double gamma, double mu) {
    const size_t t = labels.size();
    if (t == 0 || x.size() != t * params.d) throw dim_error("backward: batch size mismatch");
    std::vector<ForwardTrace> traces;
    traces.reserve(t);
    for (size_t i = 0; i < t; ++i) traces.push_back(forward(x.subspan(i * params.d, params.d), params));
    return backward_from_traces(x, traces, labels, params, gamma, mu);
}

GradCheckResult check_gradient(std::span<double> theta, const std::function<FnEval()>& f,
                               std::span<const double> analytic, double step) {
    if (theta.size() != analytic.size()) throw dim_error("check_gradient: size mismatch");
    if (!(step > 0)) throw dim_error("check_gradient: step must be positive");
    GradCheckResult r;
    for (size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + step;
        const FnEval plus = f();
        theta[i] = saved - step;
        const FnEval minus = f();
        theta[i] = saved;
        if (plus.clamped || minus.clamped) {
            ++r.skipped;
            continue;
        }
        const double numeric = (plus.value - minus.value) / (2.0 * step);
        const double a = analytic[i];
        const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        r.max_rel_error = std::max(r.max_rel_error, rel);
        ++r.checked;
    }
    return r;
}

GradCheckResult grad_check(const ModelParams& params, std::span<const double> x,
                           std::span<const uint32_t> labels, double gamma, double mu, double step) {
    ModelParams probe = params;
    const Gradients analytic = backward(x, labels, params, gamma, mu);

    std::vector<double> flat_grad;
    flat_grad.reserve(params.param_count());
    for (const auto* part : {&analytic.w0, &analytic.b0, &analytic.w1, &analytic.b1})
        flat_grad.insert(flat_grad.end(), part->begin(), part->end());

    const size_t t = labels.size();
    auto eval = [&]() -> FnEval {
        std::vector<ForwardTrace> traces;
        traces.reserve(t);
        for (size_t i = 0; i < t; ++i)
            traces.push_back(forward(x.subspan(i * probe.d, probe.d), probe));
        const LossBreakdown loss = total_loss(traces, labels, gamma, mu);
        return {loss.total, loss.clamped > 0};
    };

    GradCheckResult out;
    size_t offset = 0;
    for (auto* part : {&probe.w0, &probe.b0, &probe.w1, &probe.b1}) {
        const GradCheckResult r = check_gradient(
            {part->data(), part->size()}, eval,
            {flat_grad.data() + offset, part->size()}, step);
        out.max_rel_error = std::max(out.max_rel_error, r.max_rel_error);
        out.checked += r.checked;
        out.skipped += r.skipped;
        offset += part->size();
    }
    return out;
}

void sgd_step(ModelParams& params, const Gradients& grads, Gradients& velocity,
              double learning_rate, double momentum) {
    auto apply = [&](std::vector<double>& theta, const std::vector<double>& g,
                     std::vector<double>& v) {
        if (g.size() != theta.size() || v.size() != theta.size())
            throw dim_error("sgd_step: shape mismatch");
        for (size_t i = 0; i < theta.size(); ++i) {
            if (!std::isfinite(g[i])) throw numeric_error("sgd_step: non-finite gradient");
            v[i] = momentum * v[i] - learning_rate * g[i];
            theta[i] += v[i];
        }
    };
    apply(params.w0, grads.w0, velocity.w0);
    apply(params.b0, grads.b0, velocity.b0);
    apply(params.w1, grads.w1, velocity.w1);
    apply(params.b1, grads.b1, velocity.b1);
}

TrainResult train(const Dataset& dataset, BlockShape shape, const Hyperparams& hyper) {
    hyper.validate();
    dataset.validate();
    if (dataset.n == 0) throw dim_error("train: empty dataset");
    if (!dataset.has_labels() || dataset.num_classes < 2)
        throw dim_error("train: need labeled data with at least two classes");
    if (hyper.batch_size > dataset.n) throw dim_error("train: batch size exceeds dataset");

    TrainResult result;
    result.params = init_params(dataset.d, shape, dataset.num_classes, hyper.seed);
    if (hyper.num_batches == 0) return result;

    Gradients velocity = zeros_like(result.params);
    BatchStream stream(dataset.n, hyper.batch_size, hyper.seed);
    result.log.reserve(hyper.num_batches);

    const size_t t = hyper.batch_size;
    std::vector<double> xbatch(t * dataset.d);
    std::vector<uint32_t> ybatch(t);
    std::vector<ForwardTrace> traces(t);

    for (size_t b = 0; b < hyper.num_batches; ++b) {
        const auto idx = stream.next();
        for (size_t i = 0; i < t; ++i) {
            std::copy_n(dataset.features.data() + idx[i] * dataset.d, dataset.d,
                        xbatch.data() + i * dataset.d);
            ybatch[i] = dataset.labels[idx[i]];
        }
        try {
            for (size_t i = 0; i < t; ++i)
                traces[i] = forward({xbatch.data() + i * dataset.d, dataset.d}, result.params);

            const LossBreakdown loss = total_loss(traces, ybatch, hyper.gamma, hyper.mu);
            if (!std::isfinite(loss.total)) throw numeric_error("train: loss diverged");
            result.log.push_back({b, loss.total, loss.cls, loss.mean_ent, loss.batch_ent});

            const Gradients grads =
                backward_from_traces(xbatch, traces, ybatch, result.params, hyper.gamma, hyper.mu);
            sgd_step(result.params, grads, velocity, hyper.learning_rate, hyper.momentum);
        } catch (const numeric_error& e) {
            throw numeric_error(std::string(e.what()) + " (batch " + std::to_string(b) + ")");
        }
    }
    return result;
}

Classification classify_code(const BinaryCode& code, std::span<const double> weights,
                             std::span<const double> bias) {
    code.validate();
    const size_t c = bias.size();
    if (c == 0) throw dim_error("classify_code: empty bias");
    if (weights.size() != static_cast<size_t>(code.shape.width()) * c)
        throw dim_error("classify_code: weight matrix size mismatch");

    Classification out;
    out.scores.assign(bias.begin(), bias.end());
    for (uint32_t b = 0; b < code.shape.m; ++b) {
        const size_t row = static_cast<size_t>(b) * code.shape.k + code.indices[b];
        for (size_t j = 0; j < c; ++j) out.scores[j] += weights[row * c + j];
    }
    out.label = 0;
    for (uint32_t j = 1; j < c; ++j)
        if (out.scores[j] > out.scores[out.label]) out.label = j;
    return out;
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
    params.validate();
    io::ByteWriter w;
    w.magic("SUBM");
    w.u32(kModelVersion);
    w.u32(params.d);
    w.u32(params.shape.m);
    w.u32(params.shape.k);
    w.u32(params.num_classes);
    for (const auto* part : {&params.w0, &params.b0, &params.w1, &params.b1})
        for (double v : *part) w.f64(v);
    io::write_file(path, w.bytes());
}

ModelParams load_model(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes);
    r.magic("SUBM");
    if (r.u32() != kModelVersion) throw format_error("SUBM: unsupported version");
    ModelParams p;
    p.d = r.u32();
    const uint32_t m = r.u32();
    const uint32_t k = r.u32();
    p.num_classes = r.u32();
    if (m < 1 || k < 2 || p.d < 1 || p.num_classes < 1)
        throw format_error("SUBM: bad dimensions");
    p.shape = BlockShape(m, k);
    const size_t width = p.shape.width();
    const size_t expect =
        (static_cast<size_t>(p.d) * width + width + width * p.num_classes + p.num_classes) * 8;
    if (r.remaining() != expect) throw format_error("SUBM: payload size does not match dimensions");
    p.w0.resize(static_cast<size_t>(p.d) * width);
    p.b0.resize(width);
    p.w1.resize(width * p.num_classes);
    p.b1.resize(p.num_classes);
    for (auto* part : {&p.w0, &p.b0, &p.w1, &p.b1})
        for (double& v : *part) v = r.f64();
    r.expect_end();
    p.validate();
    return p;
}

void write_training_log(const std::filesystem::path& path, std::span<const BatchLogEntry> log) {
    std::string out = "batch,total,cls,mean_ent,batch_ent\n";
    for (const BatchLogEntry& e : log) {
        out += std::to_string(e.batch);
        for (double v : {e.total, e.cls, e.mean_ent, e.batch_ent}) {
            out += ',';
            out += io::format_double(v);
        }
        out += '\n';
    }
    io::write_file(path, {reinterpret_cast<const uint8_t*>(out.data()), out.size()});
}

}  // namespace subic
