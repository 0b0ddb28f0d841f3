#include "parsefit/embedding.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace parsefit::embedding {

EmbeddingMatrix load_embeddings(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("embeddings: empty input");
    std::istringstream hs(header);
    long n = 0, d = 0;
    if (!(hs >> n >> d) || n < 1 || d < 1) {
        throw std::runtime_error("embeddings: malformed header, expected \"N D\"");
    }
    std::string trailing;
    if (hs >> trailing) throw std::runtime_error("embeddings: malformed header, expected \"N D\"");
    EmbeddingMatrix rows(n, d);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < d; ++j) {
            double v;
            if (!(in >> v)) throw std::runtime_error("embeddings: truncated at row " +
                                                     std::to_string(i));
            if (!std::isfinite(v)) {
                throw std::runtime_error("embeddings: non-finite value at row " +
                                         std::to_string(i));
            }
            rows(i, j) = v;
        }
    }
    for (long i = 0; i < n; ++i) {
        const double norm = rows.row(i).norm();
        if (norm < 1e-15) throw std::runtime_error("embeddings: zero-norm row " + std::to_string(i));
        rows.row(i) /= norm;
    }
    return rows;
}

EmbeddingMatrix load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("embeddings: cannot open " + path);
    return load_embeddings(in);
}

void save_embeddings(std::ostream& out, const EmbeddingMatrix& rows) {
    out << rows.rows() << ' ' << rows.cols() << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            if (j) out << ' ';
            out << rows(i, j);
        }
        out << '\n';
    }
}

namespace {

// antipodal normals should land on the same embedding; components near zero
// are skipped so that noise cannot flip the decision axis
Vec3 canonical_normal(const Vec3& n) {
    for (int k = 0; k < 3; ++k) {
        if (std::abs(n[k]) > 0.1) return n[k] < 0.0 ? Vec3(-n) : n;
    }
    for (int k = 0; k < 3; ++k) {
        if (std::abs(n[k]) > 1e-12) return n[k] < 0.0 ? Vec3(-n) : n;
    }
    return n;
}

}  // namespace

EmbeddingMatrix geometric_embedding(const PointCloud& cloud, double scale_position,
                                    double scale_normal) {
    const bool use_normals = scale_normal > 0.0;
    if (use_normals && !cloud.has_normals()) {
        throw std::invalid_argument("geometric_embedding: normals requested but missing");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(cloud.size());
    const Eigen::Index d = use_normals ? 6 : 3;
    EmbeddingMatrix rows(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        rows.row(i).head<3>() = scale_position * cloud.positions[static_cast<std::size_t>(i)];
        if (use_normals) {
            rows.row(i).tail<3>() =
                scale_normal * canonical_normal(cloud.normals[static_cast<std::size_t>(i)]);
        }
        const double norm = rows.row(i).norm();
        if (norm < 1e-15) {
            throw FitError("geometric_embedding: zero-norm row " + std::to_string(i));
        }
        rows.row(i) /= norm;
    }
    return rows;
}

}  // namespace parsefit::embedding
