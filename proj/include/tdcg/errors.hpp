#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tdcg {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument value (negative stride, r <= 0, out-of-range index, ...).
class ArgumentError : public Error
{
public:
    using Error::Error;
};

/// A data-model invariant does not hold (e.g. non-increasing frame times).
class InvariantError : public Error
{
public:
    using Error::Error;
};

/// An operation needs data that is absent (e.g. forces were not recorded).
class PreconditionError : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

/// File does not start with the expected magic bytes.
class FormatError : public Error
{
public:
    using Error::Error;
};

class VersionError : public Error
{
public:
    VersionError(std::uint32_t found, std::uint32_t expected)
        : Error("unsupported file version " + std::to_string(found) + " (expected " +
                std::to_string(expected) + ")"),
          found_(found)
    {
    }
    std::uint32_t found() const { return found_; }

private:
    std::uint32_t found_;
};

class TruncationError : public Error
{
public:
    explicit TruncationError(std::uint64_t offset)
        : Error("file truncated at byte offset " + std::to_string(offset)), offset_(offset)
    {
    }
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

/// Integrator produced a non-finite state.
class DivergenceError : public Error
{
public:
    explicit DivergenceError(std::uint64_t step, const std::string& what = "")
        : Error("non-finite state at step " + std::to_string(step) + (what.empty() ? "" : ": " + what)),
          step_(step)
    {
    }
    std::uint64_t step() const { return step_; }

private:
    std::uint64_t step_;
};

/// Two particles closer than the pair-force singularity threshold.
class SingularityError : public Error
{
public:
    SingularityError(std::size_t i, std::size_t j)
        : Error("overlapping particles " + std::to_string(i) + " and " + std::to_string(j)), i_(i), j_(j)
    {
    }
    std::size_t first() const { return i_; }
    std::size_t second() const { return j_; }

private:
    std::size_t i_, j_;
};

/// Least-squares or correlation problem without usable information.
class DegenerateError : public Error
{
public:
    using Error::Error;
};

/// Error raised while simulating one path of an ensemble.
class PathError : public Error
{
public:
    PathError(std::size_t path, const std::string& what)
        : Error("path " + std::to_string(path) + ": " + what), path_(path)
    {
    }
    std::size_t path() const { return path_; }

private:
    std::size_t path_;
};

}  // namespace tdcg
