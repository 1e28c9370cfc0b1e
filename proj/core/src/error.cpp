#include "fklab/error.hpp"

namespace fklab {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Range: return "range";
    case ErrorKind::Type: return "type";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::UnboundedInverse: return "unbounded-inverse";
    case ErrorKind::CriterionInapplicable: return "criterion-inapplicable";
    case ErrorKind::SlicingInapplicable: return "slicing-inapplicable";
    case ErrorKind::Assembly: return "assembly";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Config: return "config";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fklab
