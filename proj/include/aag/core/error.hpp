#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace aag {

enum class ErrorCode {
  // knowledge base
  ParseError,
  HierarchyError,
  EmptyKnowledgeBase,
  UnknownNode,
  LevelError,
  DuplicateId,
  // planner
  PlanningFailed,
  NoToolForStage,
  CyclicDag,
  RefinementExhausted,
  // tool registry
  DuplicateTool,
  DescriptorInvalid,
  UnknownTool,
  SchemaViolation,
  ConstraintViolation,
  ExecutorError,
  ModeMismatch,
  TransportError,
  // graph construction
  SchemaInferenceFailed,
  CatalogMismatch,
  ExtractionError,
  UnknownRelation,
  ProjectionMismatch,
  KindMismatch,
  // algorithms
  EmptyGraph,
  EmptySeedSet,
  InvalidNode,
  LengthBoundError,
  MissingWeightColumn,
  // coordinator
  SchemaValidationFailed,
  BudgetExceeded,
  // pipeline
  SpecInfeasible,
  ConfigError,
  WriteOnceViolation,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::HierarchyError: return "HierarchyError";
    case ErrorCode::EmptyKnowledgeBase: return "EmptyKnowledgeBase";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::LevelError: return "LevelError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::PlanningFailed: return "PlanningFailed";
    case ErrorCode::NoToolForStage: return "NoToolForStage";
    case ErrorCode::CyclicDag: return "CyclicDag";
    case ErrorCode::RefinementExhausted: return "RefinementExhausted";
    case ErrorCode::DuplicateTool: return "DuplicateTool";
    case ErrorCode::DescriptorInvalid: return "DescriptorInvalid";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::ExecutorError: return "ExecutorError";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::SchemaInferenceFailed: return "SchemaInferenceFailed";
    case ErrorCode::CatalogMismatch: return "CatalogMismatch";
    case ErrorCode::ExtractionError: return "ExtractionError";
    case ErrorCode::UnknownRelation: return "UnknownRelation";
    case ErrorCode::ProjectionMismatch: return "ProjectionMismatch";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::EmptySeedSet: return "EmptySeedSet";
    case ErrorCode::InvalidNode: return "InvalidNode";
    case ErrorCode::LengthBoundError: return "LengthBoundError";
    case ErrorCode::MissingWeightColumn: return "MissingWeightColumn";
    case ErrorCode::SchemaValidationFailed: return "SchemaValidationFailed";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::SpecInfeasible: return "SpecInfeasible";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::WriteOnceViolation: return "WriteOnceViolation";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code plus
/// an optional subject (the node id, tool name, column, ... it is about).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string subject = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        subject_(std::move(subject)),
        detail_(std::move(message)) {}

  /// Wraps an inner failure (e.g. an executor error) keeping its code.
  Error(ErrorCode code, std::string message, std::string subject, ErrorCode cause)
      : Error(code, std::move(message), std::move(subject)) {
    cause_ = cause;
    has_cause_ = true;
  }

  ErrorCode code() const noexcept { return code_; }
  bool has_cause() const noexcept { return has_cause_; }
  ErrorCode cause() const noexcept { return has_cause_ ? cause_ : code_; }
  const std::string& subject() const noexcept { return subject_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  ErrorCode cause_ = ErrorCode::ExecutorError;
  bool has_cause_ = false;
  std::string subject_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string message, std::string subject = {}) {
  throw Error(code, std::move(message), std::move(subject));
}

}  // namespace aag
