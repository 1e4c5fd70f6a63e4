#include "seqkernel/errors.hpp"

namespace seqkernel {

void throw_input(const std::string& what) { throw InputError(what); }
void throw_config(const std::string& what) { throw ConfigError(what); }
void throw_numerical(const std::string& what) { throw NumericalError(what); }
void throw_unsupported(const std::string& what) { throw UnsupportedError(what); }

}  // namespace seqkernel
