#include "lmpa/generator.hpp"

#include <cstdio>
#include <sstream>

namespace lmpa {

namespace {

class Builder {
public:
    Builder(std::mt19937_64 &rng, ProgramShape shape) : rng_(rng), shape_(shape) {}

    std::string program() {
        int count = shape_ == ProgramShape::StraightLineSingleCall ? 2 : 2 + pick(3);
        out_ << "struct obj { f: ptr<obj>; g: ptr<obj>; }\n";
        out_ << "global g0: ptr<obj>;\nglobal g1: ptr<obj>;\n";
        for (int k = 0; k < count; ++k) {
            function(k);
        }
        return out_.str();
    }

private:
    int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
    bool chance(int percent) { return pick(100) < percent; }

    const std::string &any(const std::vector<std::string> &v) { return v[pick(static_cast<int>(v.size()))]; }
    std::string field() { return chance(50) ? "f" : "g"; }

    void function(int k) {
        int nparams = 1 + pick(3);
        arity_.push_back(nparams);
        vars_.clear();
        locals_.clear();
        out_ << "\nfn f" << k << "(";
        for (int i = 0; i < nparams; ++i) {
            out_ << (i ? ", " : "") << "p" << i << ": ptr<obj>";
            vars_.push_back("p" + std::to_string(i));
        }
        out_ << ") -> ptr<obj> {\n";
        int nlocals = 1 + pick(3);
        for (int i = 0; i < nlocals; ++i) {
            std::string name = "x" + std::to_string(i);
            out_ << "    let " << name << ": ptr<obj>;\n";
            vars_.push_back(name);
            locals_.push_back(name);
        }
        out_ << "    let q: ptr<ptr<obj>>;\n";
        pool_ = vars_;
        pool_.push_back("g0");
        pool_.push_back("g1");
        bool single = shape_ == ProgramShape::StraightLineSingleCall;
        int nstmts = 3 + pick(6);
        int call_at = single && k == 1 ? pick(nstmts) : -1;
        for (int i = 0; i < nstmts; ++i) {
            if (i == call_at) {
                call(k, "    ");
            } else {
                statement(k, "    ", !single, !single && k > 0);
            }
        }
        out_ << "    return " << any(vars_) << ";\n}\n";
    }

    void call(int k, const std::string &indent) {
        int callee = pick(k);
        out_ << indent;
        if (chance(75)) {
            out_ << any(pool_) << " = ";
        }
        out_ << "f" << callee << "(";
        for (int i = 0; i < arity_[callee]; ++i) {
            out_ << (i ? ", " : "") << any(pool_);
        }
        out_ << ");\n";
    }

    void statement(int k, const std::string &indent, bool branches, bool calls) {
        switch (pick(branches ? 10 : 9)) {
        case 0:
        case 1:
            out_ << indent << any(pool_) << " = " << any(pool_) << ";\n";
            break;
        case 2:
            out_ << indent << any(pool_) << " = " << any(pool_) << "->" << field() << ";\n";
            break;
        case 3:
            out_ << indent << any(pool_) << "->" << field() << " = " << any(pool_) << ";\n";
            break;
        case 4:
            out_ << indent << any(pool_) << " = malloc(8);\n";
            break;
        case 5:
            out_ << indent << "q = &" << any(vars_) << ";\n";
            break;
        case 6:
            if (chance(50)) {
                out_ << indent << "*q = " << any(pool_) << ";\n";
            } else {
                out_ << indent << any(pool_) << " = *q;\n";
            }
            break;
        case 7:
        case 8:
            if (calls) {
                call(k, indent);
            } else {
                out_ << indent << any(pool_) << " = " << any(pool_) << ";\n";
            }
            break;
        default: {
            std::string inner = indent + "    ";
            out_ << indent << "if (" << any(pool_) << " == null) {\n";
            for (int n = 1 + pick(3); n > 0; --n) {
                statement(k, inner, false, calls);
            }
            out_ << indent << "} else {\n";
            for (int n = pick(3); n > 0; --n) {
                statement(k, inner, false, calls);
            }
            out_ << indent << "}\n";
        }
        }
    }

    std::mt19937_64 &rng_;
    ProgramShape shape_;
    std::ostringstream out_;
    std::vector<int> arity_;
    std::vector<std::string> vars_;
    std::vector<std::string> locals_;
    std::vector<std::string> pool_;
};

} // namespace

std::string generate_program(std::mt19937_64 &rng, ProgramShape shape) { return Builder(rng, shape).program(); }

std::vector<GeneratedProgram> generate_corpus(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<GeneratedProgram> out;
    for (int i = 0; i < count; ++i) {
        ProgramShape shape = i % 4 == 0 ? ProgramShape::StraightLineSingleCall : ProgramShape::General;
        char name[32];
        std::snprintf(name, sizeof name, "gen_%03d.mc", i);
        out.push_back({name, shape, generate_program(rng, shape)});
    }
    return out;
}

} // namespace lmpa
