// Internal JSON mappings shared by checkpoint and experiment-config code.
// Not installed; keep nlohmann types out of the public headers.
#pragma once

#include <json.hpp>

#include "flowlab/nn.hpp"

namespace flowlab {

using json = nlohmann::json;

json denoiser_config_to_json(const nn::DenoiserConfig& cfg);
nn::DenoiserConfig denoiser_config_from_json(const json& j);

json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const json& j);

}  // namespace flowlab
