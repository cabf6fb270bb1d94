#pragma once

// Encoder-decoder renderer: strided-conv encoder over the 10-channel
// G-buffer, a fully connected light encoder injected at the bottleneck, and
// a transposed-conv decoder with skip connections ending in a Sigmoid.
//
// Layer names (all stages numbered from 0):
//   enc.<k>.conv.weight          4x4 stride 2, no bias (batch norm follows)
//   enc.<k>.bn.{gamma,beta}      + running stats enc.<k>.bn.running_{mean,var}
//   light.<i>.{weight,bias}      FC + Tanh; the last one outputs B*B
//   dec.<s>.deconv.weight        4x4 stride 2 transposed, no bias
//   dec.<s>.bn.{gamma,beta}      + running stats
//   out.conv.{weight,bias}       3x3 to RGB, then Sigmoid

#include "matforge/dataset/dataset.hpp"
#include "matforge/render/gbuffer.hpp"
#include "matforge/render/image.hpp"
#include "matforge/tensor/ops.hpp"
#include "matforge/tensor/parameter.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace matforge::neural {

using tensor::NormMode;
using tensor::Tensor;

struct NetworkConfig {
    int resolution = 64;                      // R
    int input_channels = render::kGBufferChannels;
    std::vector<int> widths{16, 32, 64, 64};  // encoder stage widths; depth D = widths.size()
    int light_channels = 32;                  // M
    std::vector<int> light_hidden{64};        // FC widths before the B*B layer
    int light_embed = 0;                      // width of the last FC layer; must be B*B (0 = B*B)
    bool light_turbidity = true;              // false: 3-input mode, direction only
    bool skip_connections = true;             // false ablates every skip

    int depth() const { return int(widths.size()); }
    int bottleneck() const { return resolution >> depth(); }  // B = R / 2^D
    int light_inputs() const { return light_turbidity ? 4 : 3; }

    static NetworkConfig desk_scale();
    // R = 400, widths 64 64 128 128, B = 25, M = 128.
    static NetworkConfig full_scale();
    bool operator==(const NetworkConfig&) const = default;
};

// Throws ValueError naming the violated constraint.
void validate(const NetworkConfig& config);

struct BatchNormLayer {
    std::string name;  // "enc.0.bn"
    tensor::BatchNormStats<float> stats;
};

struct Model {
    NetworkConfig config;
    std::vector<tensor::Parameter> params;
    std::vector<BatchNormLayer> norms;

    const Tensor& param(const std::string& name) const;
    // Parameters followed by running statistics, in layout order.
    std::vector<tensor::NamedArray> to_records() const;
};

// Glorot-initialized weights, gamma 1, beta 0, identity running stats.
Model build_network(const NetworkConfig& config, std::uint64_t seed);

// Direction normalized; turbidity mapped by (c - 1.7) / 8.3 and dropped in
// 3-input mode.
std::vector<float> light_vector(const dataset::LightCondition& light, bool with_turbidity = true);

// N x L light vectors -> N x M x B x B, every channel slice identical.
Tensor encode_light(const Model& model, const Tensor& lights);
// The B*B vector before reshape and replication (N x B*B).
Tensor light_embedding(const Model& model, const Tensor& lights);

// N x 10 x R x R G-buffers and N x L lights -> N x 3 x R x R in (0,1).
// Train mode updates the batch-norm running statistics and needs N >= 2.
Tensor forward(Model& model, const Tensor& gbuffers, const Tensor& lights, NormMode mode);

// Per-stage activations for inspection in tests.
struct ForwardTrace {
    std::vector<Tensor> encoder;  // e_1 .. e_D
    Tensor bottleneck;            // concat(e_D, light)
    std::vector<Tensor> decoder;  // decoder stage outputs, after their skip concat
    Tensor output;
};
ForwardTrace forward_trace(Model& model, const Tensor& gbuffers, const Tensor& lights, NormMode mode);

// Single-image inference in eval mode.
Tensor gbuffer_tensor(const render::GBuffer& gbuffer);
render::Image infer(const Model& model, const render::GBuffer& gbuffer, const dataset::LightCondition& light);

// Checkpoint plus JSON sidecar `<path>.json` holding the NetworkConfig.
void save_model(const std::filesystem::path& path, const Model& model);
// Validates every record against the layout of `config`; throws IoError
// naming the first offending record.
Model load_model(const std::filesystem::path& path, const NetworkConfig& config);
// Reads the config from the sidecar.
Model load_model(const std::filesystem::path& path);

std::string config_to_json(const NetworkConfig& config);
NetworkConfig config_from_json(const std::string& text);

} // namespace matforge::neural
