#pragma once

#include <memory>

#include "segnet_impl.hpp"

namespace octskin::nn {

std::shared_ptr<SegNetImpl> make_network(const ModelSpec& spec);

}  // namespace octskin::nn
