#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lmpa {

enum class ProgramShape {
    /// Any acyclic call structure, conditionals allowed.
    General,
    /// Two functions, no conditionals, exactly one call statement.
    StraightLineSingleCall,
};

/// Random acyclic MiniC program over one record type with two pointer
/// fields, two pointer globals, heap allocation, address-taken locals,
/// loads, stores and calls to earlier functions.
std::string generate_program(std::mt19937_64 &rng, ProgramShape shape);

struct GeneratedProgram {
    std::string name;  // gen_000.mc, ...
    ProgramShape shape;
    std::string source;
};

/// `count` programs from one seed; every fourth is straight-line
/// single-call.
std::vector<GeneratedProgram> generate_corpus(int count, std::uint64_t seed);

} // namespace lmpa
