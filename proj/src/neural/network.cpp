#include "matforge/neural/network.hpp"

#include "matforge/core/error.hpp"
#include "matforge/core/png_io.hpp"
#include "matforge/core/rng.hpp"
#include "matforge/tensor/checkpoint.hpp"
#include "matforge/tensor/optim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace matforge::neural {

using tensor::Parameter;
using tensor::Shape;

namespace {

constexpr std::size_t kKernel = 4;  // stride-2 stages: 4x4, padding 1
constexpr std::size_t kOutKernel = 3;

struct Layout {
    std::vector<std::pair<std::string, Shape>> params;
    std::vector<std::pair<std::string, std::size_t>> norms;
};

std::size_t uz(int v) { return std::size_t(v); }

// Input channels of decoder stage s (0-based, s = 0 is fed by the
// bottleneck) and the skip it appends to its output.
int skip_channels(const NetworkConfig& c, int s)
{
    const int level = c.depth() - 1 - s;  // encoder output index matching the resolution, -1 = input
    if (!c.skip_connections)
        return 0;
    return level > 0 ? c.widths[uz(level - 1)] : c.input_channels;
}

int decoder_width(const NetworkConfig& c, int s)
{
    const int level = c.depth() - 2 - s;
    return c.widths[uz(std::max(level, 0))];
}

Layout layout(const NetworkConfig& c)
{
    Layout l;
    const std::size_t k = kKernel;
    int in = c.input_channels;
    for (int e = 0; e < c.depth(); ++e) {
        const std::string p = "enc." + std::to_string(e);
        l.params.push_back({p + ".conv.weight", {uz(c.widths[uz(e)]), uz(in), k, k}});
        l.params.push_back({p + ".bn.gamma", {uz(c.widths[uz(e)])}});
        l.params.push_back({p + ".bn.beta", {uz(c.widths[uz(e)])}});
        l.norms.push_back({p + ".bn", uz(c.widths[uz(e)])});
        in = c.widths[uz(e)];
    }
    int li = c.light_inputs();
    std::vector<int> fc = c.light_hidden;
    fc.push_back(c.bottleneck() * c.bottleneck());
    for (std::size_t i = 0; i < fc.size(); ++i) {
        const std::string p = "light." + std::to_string(i);
        l.params.push_back({p + ".weight", {uz(fc[i]), uz(li)}});
        l.params.push_back({p + ".bias", {uz(fc[i])}});
        li = fc[i];
    }
    in = c.widths.back() + c.light_channels;
    for (int s = 0; s < c.depth(); ++s) {
        const std::string p = "dec." + std::to_string(s);
        const int w = decoder_width(c, s);
        l.params.push_back({p + ".deconv.weight", {uz(in), uz(w), k, k}});
        l.params.push_back({p + ".bn.gamma", {uz(w)}});
        l.params.push_back({p + ".bn.beta", {uz(w)}});
        l.norms.push_back({p + ".bn", uz(w)});
        in = w + skip_channels(c, s);
    }
    l.params.push_back({"out.conv.weight", {3, uz(in), kOutKernel, kOutKernel}});
    l.params.push_back({"out.conv.bias", {3}});
    return l;
}

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Tensor zero_bias(std::size_t n) { return Tensor::zeros({n}); }

Tensor bn(Model& m, std::size_t& norm_index, const std::string& prefix, const Tensor& x, NormMode mode)
{
    auto& layer = m.norms[norm_index++];
    return tensor::batch_norm(x, m.param(prefix + ".bn.gamma"), m.param(prefix + ".bn.beta"), layer.stats, mode);
}

} // namespace

NetworkConfig NetworkConfig::desk_scale() { return {}; }

NetworkConfig NetworkConfig::full_scale()
{
    NetworkConfig c;
    c.resolution = 400;
    c.widths = {64, 64, 128, 128};
    c.light_channels = 128;
    c.light_hidden = {64, 256};
    return c;
}

void validate(const NetworkConfig& c)
{
    if (c.input_channels != render::kGBufferChannels)
        throw ValueError("input_channels must be " + std::to_string(render::kGBufferChannels));
    if (c.widths.empty())
        throw ValueError("encoder depth must be >= 1");
    for (int w : c.widths)
        if (w < 1)
            throw ValueError("encoder widths must be >= 1");
    if (c.resolution < 1 || c.depth() > 30 || (c.resolution % (1 << c.depth())) != 0)
        throw ValueError("resolution " + std::to_string(c.resolution) + " is not a multiple of 2^" +
                         std::to_string(c.depth()));
    if (c.bottleneck() < 2)
        throw ValueError("bottleneck size R / 2^D = " + std::to_string(c.bottleneck()) + " must be >= 2");
    if (c.light_channels < 1)
        throw ValueError("light_channels must be >= 1");
    for (int h : c.light_hidden)
        if (h < 1)
            throw ValueError("light_hidden widths must be >= 1");
    if (c.light_embed != 0 && c.light_embed != c.bottleneck() * c.bottleneck())
        throw ValueError("light encoder output " + std::to_string(c.light_embed) + " does not reshape to the " +
                         std::to_string(c.bottleneck()) + "x" + std::to_string(c.bottleneck()) + " bottleneck");
}

const Tensor& Model::param(const std::string& name) const
{
    for (const auto& p : params)
        if (p.name == name)
            return p.value;
    throw ValueError("model has no parameter " + name);
}

std::vector<tensor::NamedArray> Model::to_records() const
{
    std::vector<tensor::NamedArray> out;
    for (const auto& p : params)
        out.push_back({p.name, p.value.shape(), std::vector<float>(p.value.data().begin(), p.value.data().end())});
    for (const auto& n : norms) {
        const Shape s{n.stats.mean.size()};
        out.push_back({n.name + ".running_mean", s, n.stats.mean});
        out.push_back({n.name + ".running_var", s, n.stats.var});
    }
    return out;
}

Model build_network(const NetworkConfig& config, std::uint64_t seed)
{
    validate(config);
    Model m;
    m.config = config;
    const Layout l = layout(config);
    std::uint64_t index = 0;
    for (const auto& [name, shape] : l.params) {
        ++index;
        if (ends_with(name, ".gamma")) {
            m.params.push_back({name, Tensor::full(shape, 1.0f, true)});
        } else if (ends_with(name, ".beta") || ends_with(name, ".bias")) {
            m.params.push_back({name, Tensor::zeros(shape, true)});
        } else {
            std::size_t fan_in = shape[1], fan_out = shape[0];
            if (shape.size() == 4)
                fan_in *= shape[2] * shape[3], fan_out *= shape[2] * shape[3];
            m.params.push_back({name, tensor::glorot_uniform(shape, fan_in, fan_out, derive_seed(seed, index))});
        }
    }
    for (const auto& [name, channels] : l.norms)
        m.norms.push_back({name, tensor::BatchNormStats<float>::identity(channels)});
    return m;
}

std::vector<float> light_vector(const dataset::LightCondition& light, bool with_turbidity)
{
    const auto d = shading::normalize(light.sun_dir);
    std::vector<float> v{float(d.x), float(d.y), float(d.z)};
    if (with_turbidity)
        v.push_back(float(std::clamp((light.turbidity - shading::kMinTurbidity) /
                                         (shading::kMaxTurbidity - shading::kMinTurbidity),
                                     0.0, 1.0)));
    return v;
}

Tensor light_embedding(const Model& m, const Tensor& lights)
{
    const auto& c = m.config;
    if (lights.rank() != 2 || lights.dim(1) != uz(c.light_inputs()))
        throw ShapeError("light input " + tensor::shape_string(lights.shape()) + " does not match N x " +
                         std::to_string(c.light_inputs()));
    Tensor h = lights;
    for (std::size_t i = 0; i <= c.light_hidden.size(); ++i) {
        const std::string p = "light." + std::to_string(i);
        h = tensor::tanh(tensor::fully_connected(h, m.param(p + ".weight"), m.param(p + ".bias")));
    }
    return h;
}

Tensor encode_light(const Model& m, const Tensor& lights)
{
    const std::size_t b = uz(m.config.bottleneck());
    const Tensor h = light_embedding(m, lights);
    return tensor::replicate_channels(tensor::reshape(h, {lights.dim(0), 1, b, b}), uz(m.config.light_channels));
}

ForwardTrace forward_trace(Model& m, const Tensor& x, const Tensor& lights, NormMode mode)
{
    const auto& c = m.config;
    const std::size_t r = uz(c.resolution);
    if (x.rank() != 4 || x.dim(1) != uz(c.input_channels) || x.dim(2) != r || x.dim(3) != r)
        throw ShapeError("G-buffer input " + tensor::shape_string(x.shape()) + " does not match N x " +
                         std::to_string(c.input_channels) + " x " + std::to_string(r) + " x " + std::to_string(r));
    if (lights.rank() != 2 || lights.dim(0) != x.dim(0))
        throw ShapeError("light batch " + tensor::shape_string(lights.shape()) + " does not match G-buffer batch " +
                         std::to_string(x.dim(0)));

    ForwardTrace t;
    std::size_t norm_index = 0;
    Tensor h = x;
    for (int e = 0; e < c.depth(); ++e) {
        const std::string p = "enc." + std::to_string(e);
        const Tensor& w = m.param(p + ".conv.weight");
        h = tensor::conv2d(h, w, zero_bias(w.dim(0)), 2, 1);
        h = tensor::relu(bn(m, norm_index, p, h, mode));
        t.encoder.push_back(h);
    }
    t.bottleneck = tensor::concat_channels(h, encode_light(m, lights));
    h = t.bottleneck;
    for (int s = 0; s < c.depth(); ++s) {
        const std::string p = "dec." + std::to_string(s);
        const Tensor& w = m.param(p + ".deconv.weight");
        h = tensor::conv2d_transpose(h, w, zero_bias(w.dim(1)), 2, 1);
        h = tensor::relu(bn(m, norm_index, p, h, mode));
        if (c.skip_connections) {
            const int level = c.depth() - 1 - s;
            h = tensor::concat_channels(h, level > 0 ? t.encoder[uz(level - 1)] : x);
        }
        t.decoder.push_back(h);
    }
    t.output = tensor::sigmoid(tensor::conv2d(h, m.param("out.conv.weight"), m.param("out.conv.bias"), 1, 1));
    return t;
}

Tensor forward(Model& m, const Tensor& x, const Tensor& lights, NormMode mode)
{
    return forward_trace(m, x, lights, mode).output;
}

Tensor gbuffer_tensor(const render::GBuffer& g)
{
    const std::size_t r = uz(g.resolution);
    return Tensor::from_data({1, uz(render::kGBufferChannels), r, r}, g.channels);
}

render::Image infer(const Model& model, const render::GBuffer& gbuffer, const dataset::LightCondition& light)
{
    tensor::NoGradGuard no_grad;
    const auto lv = light_vector(light, model.config.light_turbidity);
    Model& m = const_cast<Model&>(model);  // eval mode leaves the statistics untouched
    const Tensor y = forward(m, gbuffer_tensor(gbuffer), Tensor::from_data({1, lv.size()}, lv), NormMode::Eval);
    const std::vector<float> planar(y.data().begin(), y.data().end());
    return render::from_planar(planar, gbuffer.resolution, gbuffer.resolution, 3);
}

std::string config_to_json(const NetworkConfig& c)
{
    const nlohmann::json j = {{"resolution", c.resolution},
                              {"input_channels", c.input_channels},
                              {"widths", c.widths},
                              {"light_channels", c.light_channels},
                              {"light_hidden", c.light_hidden},
                              {"light_embed", c.light_embed},
                              {"light_turbidity", c.light_turbidity},
                              {"skip_connections", c.skip_connections}};
    return j.dump(2) + "\n";
}

NetworkConfig config_from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        NetworkConfig c;
        c.resolution = j.at("resolution").get<int>();
        c.input_channels = j.at("input_channels").get<int>();
        c.widths = j.at("widths").get<std::vector<int>>();
        c.light_channels = j.at("light_channels").get<int>();
        c.light_hidden = j.at("light_hidden").get<std::vector<int>>();
        c.light_embed = j.value("light_embed", 0);
        c.light_turbidity = j.at("light_turbidity").get<bool>();
        c.skip_connections = j.at("skip_connections").get<bool>();
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed network config: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const Model& model)
{
    tensor::save_checkpoint(path, model.to_records());
    const std::string text = config_to_json(model.config);
    std::filesystem::path sidecar = path;
    sidecar += ".json";
    write_file(sidecar, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Model load_model(const std::filesystem::path& path, const NetworkConfig& config)
{
    const auto records = tensor::load_checkpoint(path);
    Model m = build_network(config, 0);
    const auto expected = m.to_records();
    if (records.size() != expected.size())
        throw IoError(path.string() + ": checkpoint has " + std::to_string(records.size()) + " records, config expects " +
                      std::to_string(expected.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& got = records[i];
        const auto& want = expected[i];
        if (got.name != want.name || got.shape != want.shape)
            throw IoError(path.string() + ": record " + std::to_string(i) + " is " + got.name + " " +
                          tensor::shape_string(got.shape) + ", config expects " + want.name + " " +
                          tensor::shape_string(want.shape));
    }
    // Every record matched, so nothing below can fail half way.
    std::size_t i = 0;
    for (auto& p : m.params) {
        auto d = p.value.mutable_data();
        std::copy(records[i].data.begin(), records[i].data.end(), d.begin());
        ++i;
    }
    for (auto& n : m.norms) {
        n.stats.mean = records[i++].data;
        n.stats.var = records[i++].data;
    }
    return m;
}

Model load_model(const std::filesystem::path& path)
{
    if (!std::filesystem::is_regular_file(path))
        throw IoError("checkpoint not found: " + path.string());
    std::filesystem::path sidecar = path;
    sidecar += ".json";
    const auto bytes = read_file(sidecar);
    return load_model(path, config_from_json(std::string(bytes.begin(), bytes.end())));
}

} // namespace matforge::neural
