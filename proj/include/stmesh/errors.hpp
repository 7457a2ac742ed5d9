#pragma once

#include <stdexcept>
#include <string>

namespace stmesh {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class CollinearPlane : public Error {
  public:
    CollinearPlane() : Error("plane points are collinear") {}
};

class DegenerateTet : public Error {
  public:
    DegenerateTet() : Error("degenerate tetrahedron") {}
};

class OpenSurface : public Error {
  public:
    explicit OpenSurface(const std::string& what) : Error("open surface: " + what) {}
};

class IndexOutOfRange : public Error {
  public:
    using Error::Error;
};

class NonManifoldMesh : public Error {
  public:
    using Error::Error;
};

class NotCuttingEdge : public Error {
  public:
    using Error::Error;
};

class BadSchemeId : public Error {
  public:
    explicit BadSchemeId(int id) : Error("prism scheme id out of 1..6: " + std::to_string(id)) {}
};

class UnmatchedComponent : public Error {
  public:
    using Error::Error;
};

class NoPentaFace : public Error {
  public:
    using Error::Error;
};

class Indivisible : public Error {
  public:
    Indivisible() : Error("This polyhedron is indivisible.") {}
};

class BudgetExhausted : public Error {
  public:
    explicit BudgetExhausted(long visits)
        : Error("decision tree budget exhausted after " + std::to_string(visits) + " visits") {}
};

class IllPosedSpacetime : public Error {
  public:
    explicit IllPosedSpacetime(const std::string& details)
        : Error("ill-posed spacetime: " + details +
                "; refine the temporal resolution with a smaller dt (upsample the data in time) and retry") {}
};

class OutOfDomain : public Error {
  public:
    using Error::Error;
};

class NotFound : public Error {
  public:
    NotFound() : Error("point is outside the spacetime mesh") {}
};

class EmptyInput : public Error {
  public:
    EmptyInput() : Error("empty input") {}
};

class ParseError : public Error {
  public:
    using Error::Error;
};

class SchemaError : public Error {
  public:
    using Error::Error;
};

class IOError : public Error {
  public:
    using Error::Error;
};

} // namespace stmesh
