#include "polymkt/expm.hpp"

#include <cmath>
#include <stdexcept>

namespace polymkt {

Eigen::MatrixXd expm(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("expm: matrix must be square");
    if (!A.allFinite()) throw std::runtime_error("expm: non-finite entries");
    const Eigen::Index n = A.rows();

    // Pade(13,13) numerator coefficients (Higham's b_0..b_13).
    static const double b[14] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
    const double theta13 = 5.371920351148152;

    const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    }
    const Eigen::MatrixXd As = A / std::ldexp(1.0, squarings);

    const Eigen::MatrixXd A2 = As * As;
    const Eigen::MatrixXd A4 = A2 * A2;
    const Eigen::MatrixXd A6 = A4 * A2;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

    Eigen::MatrixXd U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                              b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    Eigen::MatrixXd V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
                        b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

    Eigen::MatrixXd R = (V - U).partialPivLu().solve(V + U);
    for (int s = 0; s < squarings; ++s) R = R * R;
    return R;
}

}  // namespace polymkt
