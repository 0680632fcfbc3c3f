#pragma once
// Binary checkpoint: versioned magic, FNV-1a checksum in the header, then a
// name/shape table followed by row-major 64-bit floats. Optionally carries
// Adam optimizer state. Round-trips are bit-exact.

#include <span>
#include <stdexcept>
#include <string>

#include "lrlm/backbone.hpp"
#include "lrlm/tensor.hpp"

namespace lrlm {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::string& path, std::span<Tensor* const> tensors,
                     const Adam* opt = nullptr);

// Tensors are matched by name; shapes in the file win (tensors are resized),
// so callers may pass freshly constructed tensors of the right names.
// Throws on version mismatch, bad checksum, truncation, or missing names.
void load_checkpoint(const std::string& path, std::span<Tensor* const> tensors,
                     Adam* opt = nullptr);

}  // namespace lrlm
