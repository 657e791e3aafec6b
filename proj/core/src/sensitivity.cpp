#include "eitmono/sensitivity.hpp"

#include <cmath>
#include <ostream>

#include "eitmono/error.hpp"
#include "parallel.hpp"

namespace eitmono {

Eigen::Matrix<double, 2, Eigen::Dynamic> pattern_gradients(const DiskMesh& mesh, const PatternSolutions& solutions,
                                                           std::size_t t) {
    const auto g = mesh.shape_gradients(t);
    const auto& tri = mesh.triangles[t];
    Eigen::Matrix<double, 3, Eigen::Dynamic> local(3, solutions.pattern_count());
    for (int a = 0; a < 3; ++a) local.row(a) = solutions.potentials.row(tri[a]);
    return g * local;
}

SensitivityTensor sensitivity_from_solutions(const DiskMesh& mesh, const PixelGrid& grid,
                                             const PatternSolutions& solutions, double sigma0) {
    const int n_el = mesh.electrode_count();
    if (solutions.pattern_count() != n_el) {
        throw InvalidArgument("sensitivity: need one potential per pattern");
    }
    if (grid.triangle_pixel.size() != mesh.triangle_count()) {
        throw InvalidArgument("sensitivity: pixel grid was built for a different mesh");
    }
    if (!(solutions.current > 0.0)) throw InvalidArgument("sensitivity: drive current must be positive");

    SensitivityTensor tensor;
    tensor.electrodes = n_el;
    tensor.background = sigma0;
    tensor.current = solutions.current;
    tensor.columns.resize(grid.pixel_count());

    const double inv_current = 1.0 / solutions.current;
    detail::parallel_for(static_cast<std::size_t>(grid.pixel_count()), [&](std::size_t p) {
        const auto& tris = grid.pixel_triangles[p];
        Eigen::MatrixXd stacked(n_el, 2 * static_cast<Eigen::Index>(tris.size()));
        for (std::size_t i = 0; i < tris.size(); ++i) {
            const double w = std::sqrt(mesh.signed_area(tris[i]));
            stacked.middleCols(2 * static_cast<Eigen::Index>(i), 2) =
                w * pattern_gradients(mesh, solutions, tris[i]).transpose();
        }
        Eigen::MatrixXd s = -inv_current * (stacked * stacked.transpose());
        s.triangularView<Eigen::StrictlyUpper>() = s.transpose().triangularView<Eigen::StrictlyUpper>();
        tensor.columns[p] = std::move(s);
    });
    return tensor;
}

SensitivityTensor assemble_sensitivity(const DiskMesh& mesh, const PixelGrid& grid, double sigma0, double current) {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
        throw InvalidArgument("sensitivity: background conductivity must be positive");
    }
    const ForwardSolver solver(mesh, uniform_field(mesh, sigma0));
    return sensitivity_from_solutions(mesh, grid, solver.solve_all(current), sigma0);
}

Eigen::MatrixXd vectorize(const SensitivityTensor& tensor) {
    const Eigen::Index l2 = static_cast<Eigen::Index>(tensor.electrodes) * tensor.electrodes;
    Eigen::MatrixXd out(l2, tensor.pixel_count());
    for (int p = 0; p < tensor.pixel_count(); ++p) {
        out.col(p) = Eigen::Map<const Eigen::VectorXd>(tensor.columns[p].data(), l2);
    }
    return out;
}

SensitivityTensor unvectorize(const Eigen::MatrixXd& matrix, int electrodes) {
    if (matrix.rows() != static_cast<Eigen::Index>(electrodes) * electrodes) {
        throw InvalidArgument("unvectorize: row count is not L^2");
    }
    SensitivityTensor tensor;
    tensor.electrodes = electrodes;
    tensor.columns.reserve(matrix.cols());
    for (Eigen::Index p = 0; p < matrix.cols(); ++p) {
        tensor.columns.emplace_back(Eigen::Map<const Eigen::MatrixXd>(matrix.col(p).data(), electrodes, electrodes));
    }
    return tensor;
}

Eigen::VectorXd vectorize_frame(const Eigen::MatrixXd& frame) {
    return Eigen::Map<const Eigen::VectorXd>(frame.data(), frame.size());
}

Eigen::VectorXd vectorize_frame(const DifferenceFrame& frame) { return vectorize_frame(frame.V); }

Eigen::MatrixXd unvectorize_frame(const Eigen::VectorXd& vec, int electrodes) {
    if (vec.size() != static_cast<Eigen::Index>(electrodes) * electrodes) {
        throw InvalidArgument("unvectorize_frame: length is not L^2");
    }
    return Eigen::Map<const Eigen::MatrixXd>(vec.data(), electrodes, electrodes);
}

void write_sensitivity_text(std::ostream& out, const SensitivityTensor& tensor) {
    out.precision(17);
    out << "# eitmono sensitivity v1\n";
    out << "electrodes " << tensor.electrodes << " pixels " << tensor.pixel_count() << " background "
        << tensor.background << " current " << tensor.current << '\n';
    for (int p = 0; p < tensor.pixel_count(); ++p) {
        out << "pixel " << p << '\n';
        const auto& s = tensor.columns[p];
        for (Eigen::Index j = 0; j < s.rows(); ++j) {
            for (Eigen::Index l = 0; l < s.cols(); ++l) {
                if (l) out << ' ';
                out << s(j, l);
            }
            out << '\n';
        }
    }
}

}  // namespace eitmono
