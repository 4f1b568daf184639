#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace twogrid {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateTet : SimError { using SimError::SimError; };
struct EmptyMesh : SimError { using SimError::SimError; };
struct SizeMismatch : SimError { using SimError::SimError; };
struct ParseError : SimError { using SimError::SimError; };
struct IndexError : SimError { using SimError::SimError; };
struct DanglingFace : SimError { using SimError::SimError; };
struct DegenerateFace : SimError { using SimError::SimError; };
struct DegenerateElement : SimError { using SimError::SimError; };
struct NonPositiveDt : SimError { using SimError::SimError; };
struct SingularSystem : SimError { using SimError::SimError; };
struct SolverDiverged : SimError { using SimError::SimError; };
struct InsufficientConstraints : SimError { using SimError::SimError; };
struct NotConverged : SimError { using SimError::SimError; };
struct ProbeOutsideMesh : SimError { using SimError::SimError; };
struct ValidationError : SimError { using SimError::SimError; };
struct IoError : SimError { using SimError::SimError; };
struct BracketFailure : SimError { using SimError::SimError; };

}  // namespace twogrid
