#pragma once

#include <stdexcept>
#include <string>

namespace scherkstack {

struct Error : std::runtime_error {
    explicit Error(const std::string& m) : std::runtime_error(m) {}
};

#define SCHERKSTACK_DEFINE_ERROR(NAME)                                       \
    struct NAME : Error {                                                    \
        explicit NAME(const std::string& m) : Error(#NAME ": " + m) {}       \
    }

SCHERKSTACK_DEFINE_ERROR(PoleError);
SCHERKSTACK_DEFINE_ERROR(IndeterminateError);
SCHERKSTACK_DEFINE_ERROR(PathError);
SCHERKSTACK_DEFINE_ERROR(DomainError);
SCHERKSTACK_DEFINE_ERROR(GeometryError);
SCHERKSTACK_DEFINE_ERROR(RangeError);
SCHERKSTACK_DEFINE_ERROR(AnnulusError);
SCHERKSTACK_DEFINE_ERROR(ConvergenceError);
SCHERKSTACK_DEFINE_ERROR(SpecError);
SCHERKSTACK_DEFINE_ERROR(RegionError);
SCHERKSTACK_DEFINE_ERROR(RootError);
SCHERKSTACK_DEFINE_ERROR(ContourError);
SCHERKSTACK_DEFINE_ERROR(BranchError);
SCHERKSTACK_DEFINE_ERROR(SingularJacobianError);
SCHERKSTACK_DEFINE_ERROR(MaxIterError);
SCHERKSTACK_DEFINE_ERROR(NotConvergedError);
SCHERKSTACK_DEFINE_ERROR(StitchError);

#undef SCHERKSTACK_DEFINE_ERROR

} // namespace scherkstack
