#ifndef U2NET_ERROR_HPP
#define U2NET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace u2net {

// Invalid shapes, channel mismatches, bad block/network configuration.
// Raised at construction or op-call time, never mid-iteration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse (e.g. backward() on a non-scalar).
class UsageError : public std::logic_error {
public:
    explicit UsageError(const std::string& msg) : std::logic_error(msg) {}
};

// Unreadable files, unmatched datasets, malformed inputs.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN losses, failed gradient verification.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint files carry enough framing to distinguish how they are broken.
class CheckpointError : public DataError {
public:
    enum class Kind {
        bad_magic,
        version_mismatch,
        truncated,
        corrupt,
        shape_mismatch,
    };

    CheckpointError(Kind kind, const std::string& msg)
        : DataError(msg), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

} // namespace u2net

#endif
