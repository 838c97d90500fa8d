#pragma once

#include <stdexcept>
#include <string>

namespace gyroap {

enum class ErrKind {
    DomainEscape,
    StepBudgetExceeded,
    EnergyDriftExceeded,
    FixedPointDiverged,
    NegativeEnergy,
    ZeroDirection,
    LengthMismatch,
    DegenerateFit,
    ConfigError,
    IoError,
};

// Short token used in sweep status columns and log lines.
inline const char* err_token(ErrKind k) {
    switch (k) {
        case ErrKind::DomainEscape:        return "domain-escape";
        case ErrKind::StepBudgetExceeded:  return "step-budget";
        case ErrKind::EnergyDriftExceeded: return "energy-drift";
        case ErrKind::FixedPointDiverged:  return "fp-diverged";
        case ErrKind::NegativeEnergy:      return "negative-energy";
        case ErrKind::ZeroDirection:       return "zero-direction";
        case ErrKind::LengthMismatch:      return "length-mismatch";
        case ErrKind::DegenerateFit:       return "degenerate-fit";
        case ErrKind::ConfigError:         return "config-error";
        case ErrKind::IoError:             return "io-error";
    }
    return "unknown";
}

class SimError : public std::runtime_error {
public:
    SimError(ErrKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrKind kind() const { return kind_; }

private:
    ErrKind kind_;
};

struct DomainEscape : SimError {
    explicit DomainEscape(const std::string& w) : SimError(ErrKind::DomainEscape, w) {}
};
struct StepBudgetExceeded : SimError {
    explicit StepBudgetExceeded(const std::string& w) : SimError(ErrKind::StepBudgetExceeded, w) {}
};
struct EnergyDriftExceeded : SimError {
    explicit EnergyDriftExceeded(const std::string& w) : SimError(ErrKind::EnergyDriftExceeded, w) {}
};
struct FixedPointDiverged : SimError {
    explicit FixedPointDiverged(const std::string& w) : SimError(ErrKind::FixedPointDiverged, w) {}
};
struct NegativeEnergy : SimError {
    explicit NegativeEnergy(const std::string& w) : SimError(ErrKind::NegativeEnergy, w) {}
};
struct ZeroDirection : SimError {
    explicit ZeroDirection(const std::string& w) : SimError(ErrKind::ZeroDirection, w) {}
};
struct LengthMismatch : SimError {
    explicit LengthMismatch(const std::string& w) : SimError(ErrKind::LengthMismatch, w) {}
};
struct DegenerateFit : SimError {
    explicit DegenerateFit(const std::string& w) : SimError(ErrKind::DegenerateFit, w) {}
};
struct ConfigError : SimError {
    explicit ConfigError(const std::string& w) : SimError(ErrKind::ConfigError, w) {}
};
struct IoError : SimError {
    explicit IoError(const std::string& w) : SimError(ErrKind::IoError, w) {}
};

} // namespace gyroap
