#pragma once

#include <stdexcept>
#include <string>

namespace selfsim {

/// Base of every numerical failure raised by the library.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Evaluation too close to the set (u+y)^2 = 1.
class SonicDegeneracy : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StepSizeUnderflow : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class MaxStepsExceeded : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoSignChange : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IllConditioned : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class QuadratureFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NodePassingFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PoleError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SlowConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ResonantOrder : public NumericalError {
public:
    ResonantOrder(int order, double y_star)
        : NumericalError("resonant series order " + std::to_string(order) +
                         " at y*=" + std::to_string(y_star)),
          order(order), y_star(y_star) {}
    int order;
    double y_star;
};

class DegenerateExponent : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientSeparation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SonicGuardHit : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class VelocityBoundViolated : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class BlowupBeforeY0 : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Origin series launch unusable (truncation residual above tolerance).
class OriginSeriesFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoBracket : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Requested root lies below what double precision can resolve.
class PrecisionFloor : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TailUncertain : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace selfsim
