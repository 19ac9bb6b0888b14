#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compilot/affine.hpp"

namespace compilot {

enum class ScalarType { Long, Double };

struct Param {
  std::string name;
  std::int64_t value = 1;
  bool operator==(const Param&) const = default;
};

struct BufferDecl {
  std::string name;
  ScalarType type = ScalarType::Long;
  std::vector<AffineExpr> extents;
  bool operator==(const BufferDecl&) const = default;
};

struct Access {
  std::string buffer;
  std::vector<AffineExpr> subscripts;
  bool operator==(const Access&) const = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Value, Load, Neg, Add, Sub, Mul, Div };

  Kind kind = Kind::Value;
  AffineExpr value;  // Value
  Access load;       // Load
  ExprPtr lhs;       // unary operand or left operand
  ExprPtr rhs;

  static ExprPtr make_value(AffineExpr v);
  static ExprPtr make_load(Access a);
  static ExprPtr make_neg(ExprPtr operand);
  static ExprPtr make_binary(Kind kind, ExprPtr lhs, ExprPtr rhs);
};

bool expr_equal(const Expr& a, const Expr& b);
ExprPtr substitute_expr(const ExprPtr& e, const std::map<std::string, AffineExpr, std::less<>>& subst);
ExprPtr rename_buffers(const ExprPtr& e, const std::map<std::string, std::string>& names);
// Loads in evaluation order (left to right).
void collect_loads(const Expr& e, std::vector<const Access*>& out);

struct Assignment {
  Access target;
  ExprPtr value;
};

struct Loop {
  std::string iterator;
  Bound lower;
  Bound upper;  // exclusive
  int id = 0;   // computations sharing a loop carry equal ids
  bool parallel = false;
  int unroll = 0;  // 0 when not unrolled
  bool operator==(const Loop&) const = default;
};

struct Computation {
  std::string comp_id;
  std::vector<Loop> loops;  // outermost first
  std::vector<Constraint> guards;
  Assignment body;

  std::size_t depth() const { return loops.size(); }
};

struct Kernel {
  std::string name;
  std::vector<Param> params;
  std::vector<BufferDecl> buffers;
  std::vector<Computation> computations;  // program order

  const Computation* find(std::string_view comp_id) const;
  std::optional<std::size_t> index_of(std::string_view comp_id) const;
  const BufferDecl* buffer(std::string_view name) const;
  std::optional<std::int64_t> param_value(std::string_view name) const;
  bool is_param(std::string_view name) const { return param_value(name).has_value(); }
};

bool operator==(const Assignment& a, const Assignment& b);
bool operator==(const Computation& a, const Computation& b);
bool operator==(const Kernel& a, const Kernel& b);

// Parsing and printing of the kernel file format.
Kernel parse_kernel(std::string_view source);
std::string print_kernel(const Kernel& kernel);
std::string print_expr(const Expr& e);
std::string print_access(const Access& a);

// Throws KernelError on violated invariants.
void validate_kernel(const Kernel& kernel);

// Reassign loop ids in first-appearance order.
void renumber_loops(Kernel& kernel);

// Number of leading loops computations a and b share.
std::size_t shared_depth(const Kernel& kernel, std::size_t a, std::size_t b);

// Computations inside loop `level` of computation `comp` (including comp), in program order.
std::vector<std::size_t> loop_group(const Kernel& kernel, std::size_t comp, std::size_t level);

// Copy of the kernel with some parameter values replaced.
Kernel with_params(const Kernel& kernel, const std::map<std::string, std::int64_t>& values);

struct Anonymized {
  Kernel kernel;
  std::map<std::string, std::string> buffer_names;                  // new -> original
  std::vector<std::map<std::string, std::string>> iterator_names;  // per computation, new -> original
};

Anonymized anonymize(const Kernel& kernel);

// Rejects non-positive times with std::invalid_argument.
std::string render_for_prompt(const Kernel& kernel, double initial_time_ms);

// Loop tree view: computations grouped under shared loops.
struct LoopTreeNode {
  static constexpr std::size_t kNoComp = static_cast<std::size_t>(-1);
  const Loop* loop = nullptr;   // set for loop nodes
  std::size_t comp = kNoComp;   // set for statement leaves
  std::vector<LoopTreeNode> children;
};

std::vector<LoopTreeNode> build_loop_tree(const Kernel& kernel);

// Reference interpreter. All scalars are int64 with wrapping arithmetic.
using BufferData = std::map<std::string, std::vector<std::int64_t>>;

struct InterpretResult {
  BufferData buffers;
  std::vector<std::uint64_t> instances;  // per computation
};

std::int64_t buffer_size(const Kernel& kernel, const BufferDecl& decl);
std::vector<std::int64_t> buffer_extents(const Kernel& kernel, const BufferDecl& decl);

// Buffers missing from `init` start zeroed.
InterpretResult interpret_counting(const Kernel& kernel, const BufferData& init);
BufferData interpret(const Kernel& kernel, const BufferData& init);

// Seeded inputs in [1, 100] for every buffer.
BufferData random_inputs(const Kernel& kernel, std::uint64_t seed);

// Body instances per computation; inner guard-free loops are counted without iterating.
std::vector<std::uint64_t> count_instances(const Kernel& kernel);
std::uint64_t total_iteration_points(const Kernel& kernel);

// Stable 64-bit FNV-1a hash of the printed kernel.
std::uint64_t kernel_hash(const Kernel& kernel);

}  // namespace compilot
