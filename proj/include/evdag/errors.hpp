#pragma once

#include <stdexcept>
#include <string>

namespace evdag {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong" can catch this; the CLI maps subclasses onto
// exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Graph construction.
class CycleDetected : public Error { public: using Error::Error; };
class DuplicateEdge : public Error { public: using Error::Error; };
class SelfLoop : public Error { public: using Error::Error; };
class ZeroWeight : public Error { public: using Error::Error; };

class InvalidParams : public Error { public: using Error::Error; };
class SizeMismatch : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };

// Linear algebra.
class NumericalFailure : public Error { public: using Error::Error; };
class SingularSubblock : public Error { public: using Error::Error; };
class RankDeficient : public Error { public: using Error::Error; };
class NotSPD : public Error { public: using Error::Error; };

// Learners. These are "the data did not support a decision" failures rather
// than programming errors, so they share a base the experiment runner can
// record per trial.
class LearnerError : public Error { public: using Error::Error; };
class OrderStalled : public LearnerError { public: using LearnerError::LearnerError; };
class NoPassingSubset : public LearnerError { public: using LearnerError::LearnerError; };
class BMinExhausted : public LearnerError { public: using LearnerError::LearnerError; };

class VerificationFailed : public Error { public: using Error::Error; };

}  // namespace evdag
