#pragma once

#include <stdexcept>
#include <string>

namespace edgemargin {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// numerics
class SingularMatrix : public Error {
public:
    explicit SingularMatrix(const std::string& what) : Error(what) {}
};
class NoConvergence : public Error {
public:
    explicit NoConvergence(const std::string& what) : Error(what) {}
};

// graph structure
class GraphError : public Error {
public:
    explicit GraphError(const std::string& what) : Error(what) {}
};
class NoInBranching : public GraphError {
public:
    explicit NoInBranching(const std::string& what) : GraphError(what) {}
};
class RootNotReachable : public GraphError {
public:
    explicit RootNotReachable(const std::string& what) : GraphError(what) {}
};
class NotAcyclic : public GraphError {
public:
    explicit NotAcyclic(const std::string& what) : GraphError(what) {}
};
class MultipleGloballyReachable : public GraphError {
public:
    explicit MultipleGloballyReachable(const std::string& what) : GraphError(what) {}
};
class NotSimpleCycle : public GraphError {
public:
    explicit NotSimpleCycle(const std::string& what) : GraphError(what) {}
};

// factorization / robustness
class IllConditioned : public Error {
public:
    explicit IllConditioned(const std::string& what) : Error(what) {}
};
class DegenerateUpdate : public Error {
public:
    explicit DegenerateUpdate(const std::string& what) : Error(what) {}
};
class SingularAtS : public Error {
public:
    explicit SingularAtS(const std::string& what) : Error(what) {}
};

// file ingestion
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

} // namespace edgemargin
