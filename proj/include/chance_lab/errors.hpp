#pragma once

#include <stdexcept>
#include <string>

namespace chance_lab {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 2 and any other Error to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CHANCE_LAB_DEFINE_ERROR(Name)      \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  };

// rationals / probabilities
CHANCE_LAB_DEFINE_ERROR(ParseError)
CHANCE_LAB_DEFINE_ERROR(OutOfRange)

// measures
CHANCE_LAB_DEFINE_ERROR(NegativeMass)
CHANCE_LAB_DEFINE_ERROR(MassExceedsOne)
CHANCE_LAB_DEFINE_ERROR(TailOverlapsHead)
CHANCE_LAB_DEFINE_ERROR(InvalidTail)
CHANCE_LAB_DEFINE_ERROR(AlreadyCountablyAdditive)

// confirmation
CHANCE_LAB_DEFINE_ERROR(InvalidCredenceState)
CHANCE_LAB_DEFINE_ERROR(ZeroEvidence)
CHANCE_LAB_DEFINE_ERROR(NotAnHStarPair)
CHANCE_LAB_DEFINE_ERROR(DeficientTrueModel)
CHANCE_LAB_DEFINE_ERROR(LambdaNotLessThanOne)

// scales
CHANCE_LAB_DEFINE_ERROR(InvalidSequenceFunction)
CHANCE_LAB_DEFINE_ERROR(InvalidDartboard)
CHANCE_LAB_DEFINE_ERROR(TargetOutOfRange)
CHANCE_LAB_DEFINE_ERROR(FamilyNotClosedForm)
CHANCE_LAB_DEFINE_ERROR(HorizonMismatch)

// procedures
CHANCE_LAB_DEFINE_ERROR(InvalidCircleModel)
CHANCE_LAB_DEFINE_ERROR(InvalidArc)
CHANCE_LAB_DEFINE_ERROR(AtomDetected)
CHANCE_LAB_DEFINE_ERROR(EmptyPrefix)
CHANCE_LAB_DEFINE_ERROR(PrefixTooLong)

// experiment runner
CHANCE_LAB_DEFINE_ERROR(ConfigError)
CHANCE_LAB_DEFINE_ERROR(IoError)

#undef CHANCE_LAB_DEFINE_ERROR

}  // namespace chance_lab
