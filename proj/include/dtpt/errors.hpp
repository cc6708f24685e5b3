#pragma once

#include <stdexcept>
#include <string>

namespace dtpt {

// Two failure families, mapped to process exit codes by the CLI:
//   validation_error -> 2 (bad config / violated precondition)
//   numeric_error    -> 3 (well-posed input, but the computation is undefined
//                          or a solver failed)
class error : public std::runtime_error {
public:
    error(std::string msg, int code) : std::runtime_error(std::move(msg)), code_(code) {}
    int exit_code() const noexcept { return code_; }
private:
    int code_;
};

class validation_error : public error {
public:
    explicit validation_error(const std::string& msg) : error(msg, 2) {}
};

class numeric_error : public error {
public:
    explicit numeric_error(const std::string& msg) : error(msg, 3) {}
};

// -- validation family ------------------------------------------------------

class config_error : public validation_error {
public:
    using validation_error::validation_error;
};

class shape_mismatch : public validation_error {
public:
    using validation_error::validation_error;
};

class dimension_mismatch : public validation_error {
public:
    using validation_error::validation_error;
};

// -- numeric family ---------------------------------------------------------

class gap_closed : public numeric_error {
public:
    using numeric_error::numeric_error;
};

class non_integer_winding : public numeric_error {
public:
    using numeric_error::numeric_error;
};

class degenerate_fit : public numeric_error {
public:
    using numeric_error::numeric_error;
};

class convergence_failure : public numeric_error {
public:
    using numeric_error::numeric_error;
};

class edge_undefined : public numeric_error {
public:
    using numeric_error::numeric_error;
};

class defective_matrix : public numeric_error {
public:
    using numeric_error::numeric_error;
};

class step_too_large : public numeric_error {
public:
    using numeric_error::numeric_error;
};

}
