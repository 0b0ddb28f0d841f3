#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "parsefit/types.hpp"

namespace parsefit::embedding {

/// N x D matrix with one unit-norm row per point.
using EmbeddingMatrix = Eigen::MatrixXd;

/// Text format: first line "N D", then N lines of D reals. Rows are
/// renormalized to unit length on load.
EmbeddingMatrix load_embeddings(std::istream& in);
EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings(std::ostream& out, const EmbeddingMatrix& rows);

/// Analytic per-point features: unit-normalized concatenation of the scaled
/// position and the scaled, sign-canonicalized normal. Deterministic and
/// permutation-equivariant.
EmbeddingMatrix geometric_embedding(const PointCloud& cloud, double scale_position = 1.0,
                                    double scale_normal = 1.0);

}  // namespace parsefit::embedding
