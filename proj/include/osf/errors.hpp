#ifndef OSF_ERRORS_HPP
#define OSF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace osf {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct AmbiguousGeodesic : Error { using Error::Error; };
struct DomainError       : Error { using Error::Error; };
struct NonMonotone       : Error { using Error::Error; };
struct NoAdmissibleScale : Error { using Error::Error; };
struct CertificationFailed : Error { using Error::Error; };
struct TubesOverlap      : Error { using Error::Error; };
struct SupportTooLarge   : Error { using Error::Error; };
struct StepUnderflow     : Error { using Error::Error; };
struct RecurrenceNotFound : Error { using Error::Error; };
struct OracleFailure     : Error { using Error::Error; };
struct EmptyList         : Error { using Error::Error; };
struct ValidationError   : Error { using Error::Error; };

} // namespace osf

#endif
