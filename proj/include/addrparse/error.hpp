#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace addrparse {

// Base of every error the library throws. Subclasses map onto the CLI's exit
// codes (see cli.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyAddress : public Error {
public:
    EmptyAddress() : Error("empty address") {}
};

// Corpus, report or model content that does not match the expected schema.
class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    explicit SchemaError(const std::string& what) : SchemaError(0, what) {}

    // 1-based line number, 0 when not tied to a line.
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class AllMasked : public Error {
public:
    AllMasked() : Error("every position is masked") {}
};

class NotScalar : public Error {
public:
    NotScalar() : Error("backward() requires a 1x1 output") {}
};

class IncompatiblePattern : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

class CorruptFile : public Error {
public:
    using Error::Error;
};

class TooFewRuns : public Error {
public:
    TooFewRuns() : Error("aggregation needs at least two runs") {}
};

class Diverged : public Error {
public:
    Diverged(int epoch, double loss)
        : Error("training diverged at epoch " + std::to_string(epoch) +
                " (train loss " + std::to_string(loss) + ")"),
          epoch_(epoch), loss_(loss) {}

    int epoch() const { return epoch_; }
    double loss() const { return loss_; }

private:
    int epoch_;
    double loss_;
};

class ProtocolFailed : public Error {
public:
    using Error::Error;
};

}  // namespace addrparse
