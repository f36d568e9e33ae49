#pragma once

#include <string>

#include "vqp/field.hpp"
#include "vqp/quantizer.hpp"

namespace vqp {

// Shortest-of-17-significant-digits it is not: every float in emitted files
// uses printf "%.17g" so that equal doubles always serialize to equal bytes.
std::string format_double(double v);

// KL basis file: one line of JSON metadata, then little-endian float64 blocks
// (eigenvalues, eigenvectors mode-major, lumped mass diagonal).
void save_kl_basis(const std::string& path, const KLBasis& basis);
KLBasis load_kl_basis(const std::string& path);  // "artifact-not-found"

// Codebook file: one line of JSON metadata, then the P x m centroid block in
// little-endian float64. Grid codebooks rebuild their latent sites from the
// stored grid parameter.
void save_codebook(const std::string& path, const Codebook& codebook);
Codebook load_codebook(const std::string& path);

}  // namespace vqp
