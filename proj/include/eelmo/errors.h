#ifndef EELMO_ERRORS_H_
#define EELMO_ERRORS_H_

#include <stdexcept>
#include <string>

namespace eelmo {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EELMO_DEFINE_ERROR(Name)           \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

EELMO_DEFINE_ERROR(DimensionError);       // extents do not conform
EELMO_DEFINE_ERROR(VocabularyError);      // id outside an inventory
EELMO_DEFINE_ERROR(ContractError);        // caller broke a precondition
EELMO_DEFINE_ERROR(DegenerateSetError);   // empty sample / candidate set
EELMO_DEFINE_ERROR(ParameterError);       // bad hyperparameter value
EELMO_DEFINE_ERROR(StateError);           // object not in required state
EELMO_DEFINE_ERROR(NormalizationError);   // zero-norm row
EELMO_DEFINE_ERROR(NumericError);         // non-finite value
EELMO_DEFINE_ERROR(ParseError);           // malformed input record
EELMO_DEFINE_ERROR(ValidationError);      // record violates an invariant
EELMO_DEFINE_ERROR(InitializationError);  // cannot initialize parameters
EELMO_DEFINE_ERROR(DivergenceError);      // training produced non-finite loss
EELMO_DEFINE_ERROR(FeatureError);         // invalid feature input
EELMO_DEFINE_ERROR(QueryError);           // invalid ranking query
EELMO_DEFINE_ERROR(IoError);              // filesystem failure
EELMO_DEFINE_ERROR(FormatError);          // checkpoint / config format

#undef EELMO_DEFINE_ERROR

}  // namespace eelmo

#endif  // EELMO_ERRORS_H_
