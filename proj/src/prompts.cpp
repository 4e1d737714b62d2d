#include "regraph/prompts.hpp"

#include <array>
#include <sstream>

namespace regraph {

namespace {

constexpr std::string_view kReasoningText = R"PROMPT(You are an excellent high-performance computing engineer, skilled in optimizing CPP code using CUDA. Now, the user will provide you with CPP code, and you need to optimize it step by step using CUDA.

# Notes
1. Please optimize CUDA step by step. In each step of the optimization process, you need to provide the reasoning behind the optimization, explain the optimization methods used, and describe how these methods are applied. Finally, provide the optimized code. Optimization methods refer to CUDA optimization techniques such as shared memory, warp divergence elimination etc. 'How the optimization methods are used' refers to how these CUDA optimization techniques are applied to optimize the code.
2. The optimization process should be returned as a JSON list.
3. The function name must remain the same as the initial function after each optimization step.

# Prompt Format

The user will provide a JSON dictionary in the following format:

```json
{
    "kernel": "<The CPP code provided by user>"
}
```

# Response Format

You should respond in the following JSON format:

```json
[
    {
        "think": "<The thought process for this optimization step>",
        "method": "<The optimization method used>",
        "detail": "<How the optimization methods are used>",
        "code": "<The optimized code obtained in this step>"
    }
]
```
)PROMPT";

constexpr std::string_view kRelabelText = R"PROMPT(You are an excellent high-performance computing engineer, skilled in optimizing CPP code using CUDA. Now, the user will provide you with a step-by-step optimization process for CPP code along with some existing CUDA optimization methods. You need to determine whether each CUDA optimization method used in this step-by-step process falls within the scope of the existing CUDA optimization methods.

If the method used is part of the existing methods, rename it to the corresponding method name from the existing ones; otherwise, keep the optimization method's name unchanged.

# Notes
1. The user input is a json dict including 2 lists, 'methods' represents the existing CUDA optimization methods, and 'process' represents the optimization process, where each item represents one optimization step.
2. For each optimization step, you need to make a judgment.
3. The CUDA optimization method used in each step is indicated in the 'method' field.
4. You should return a list in JSON format, with the same length as the input list.

# Prompt Format

The user will provide a JSON dictionary in the following format:

```json
{
    "methods": [<CUDA optimization methods existed>],
    "process": [
        {
            "think": "<The thought process for this optimization step>",
            "method": "<The optimization method used>",
            "detail": "<How the optimization methods are used>",
            "code": "<The optimized code obtained in this step>"
        }
    ]
}
```

# Response Format

You should respond in the following JSON format:

```json
[
    {
        "existed": "<yes/no>",
        "method": "<If yes, the corresponding method name from the existing methods; if no, keep the original method name>"
    }
]
```
)PROMPT";

constexpr std::string_view kStandardText = R"PROMPT(You are an excellent high-performance computing engineer, skilled in optimizing CPP code using CUDA. Now, the user will provide you with CPP code, and you need to optimize it using CUDA.

# Notes
1. You need to use CUDA to optimize the CPP code provided by user.
2. The optimized function name needs to remain consistent with the original function. You need to handle the data transfer between host (CPU) memory and device (GPU) memory, as well as the invocation of CUDA kernels, within the function.
3. You must provide the complete code without any omissions.

# Prompt Format

The user will provide a JSON dictionary in the following format:

```json
{
    "kernel": "<The CPP code provided by user>"
}
```

# Response Format

You should respond in the following JSON format:

```json
{
        "think": "<The thought process for this optimization>",
        "code": "<The optimized code using CUDA>"
}
```
)PROMPT";

constexpr std::string_view kCotText = R"PROMPT(You are an excellent high-performance computing engineer, skilled in optimizing CPP code using CUDA. Now, the user will provide you with CPP code, and you need to optimize it step by step using CUDA.

# Notes
1. Please optimize CUDA step by step. In each step of the optimization process, you need to provide the reasoning behind the optimization, explain the optimization methods used, and describe how these methods are applied. Finally, provide the optimized code. Optimization methods refer to CUDA optimization techniques such as shared memory, warp divergence elimination etc. 'How the optimization methods are used' refers to how these CUDA optimization techniques are applied to optimize the code.
2. The optimization process should be returned as a JSON list.
3. The function name must remain the same as the initial function after each optimization step. You need to handle the data transfer between host (CPU) memory and device (GPU) memory, as well as the invocation of CUDA kernels, within the function.
4. You must provide the complete code without any omissions.

# Prompt Format

The user will provide a JSON dictionary in the following format:

```json
{
    "kernel": "<The CPP code provided by user>"
}
```

# Response Format

You should respond in the following JSON format:

```json
[
    {
        "think": "<The thought process for this optimization step>",
        "method": "<The optimization method used>",
        "detail": "<How the optimization methods are used>",
        "code": "<The optimized code obtained in this step>"
    }
]
```
)PROMPT";

constexpr std::string_view kRagText = R"PROMPT(You are a coding expert that writes very fast code. You write parallel C and C++ code using CUDA and always strive to make the code as fast as possible. The user will give you code and you will provide a modified version of the user's code that is as fast as possible using CUDA. At the same time, the user will also provide an optimization example, including the original program and the optimized program using CUDA. You can refer to this optimization example for your own optimization.

# Prompt format

The user will provide you a JSON dictionary in the following format:

```json
{
    "source_code" : <Initial code>,
    "example_original" : <Example original program>,
    "example_optimized": <Example optimized program>
}
```

# Response format

You will respond with a JSON dictionary in the following format:

```json
{
    "updated_code" : <Optimized code>
}
```
)PROMPT";

constexpr std::string_view kRegraphtText = R"PROMPT(You are a coding expert that writes very fast code. You write parallel C and C++ code using CUDA and always strive to make the code as fast as possible. The user will give you code and you will provide a modified version of the user's code that is as fast as possible using CUDA.
At the same time, the user will also provide an optimization example, including an optimization example consisted of the original program and the optimized program using CUDA, and the CUDA optimization method used.
This optimization example may not necessarily apply to the current code to be optimized, so you also need to determine whether the provided optimization method is suitable.

# Prompt format

The user will provide you a JSON dictionary in the following format:

```json
{
    "source_code" : <Initial code>,
    "example": {
        "origin": <The original program in the optimization example>,
        "optimized": <The optimized program using CUDA in the optimization example>,
        "method": <The CUDA optimization method used in the optimization example>
    }
}
```

# Response format

You will respond with a JSON dictionary in the following format:

```json
{
    "suitable": <If the provided optimization method is suitable, yes/no>,
    "optimization": <The optimized code using CUDA>
}
```
)PROMPT";

constexpr std::string_view kKernelExtractText = R"PROMPT(**CUDA kernel process prompt**

**Role**:
You are a professional high performance computing(HPC) engineer, skilled in optimizing C++ serial code using CUDA.

**Responsibility**:
You are supposed to extract the CUDA kernels from the given CUDA code file and identify the optimization techniques used in them.
If the provided CUDA code file contains multiple CUDA kernels, you should extract all of them and for each of them analyze all optimizations used and corresponding code snippet.

**Prompt Format**:

The user will provide a JSON dictionary in the following format:

```json
{
    "file": "<The CUDA code file content>"
}
```

**Response Format**:
```json
{
    "kernels": [
        {
            "name": <extracted cuda kernel name>,
            "content": <extracted cuda kernel content>
        }
    ],
    "optimizations": [
        [
            {
                "optimization": <the optimization method used>,
                "snippet": <corresponding code snippet>
            }
        ]
    ]
}
```

**Precautions**
1. You must only return the kernels that exist within this file, not those imported from other files and merely called here.
2. For each kernel, you must include its complete content without any omissions or abbreviated formatting.
3. Ensure that in the returned JSON content, the length of kernels matches the length of optimizations, meaning each kernel corresponds to a list of optimizations.
)PROMPT";

constexpr std::string_view kDependencyText = R"PROMPT(You are an HPC engineer proficient in using CUDA. The CUDA kernel is extracted from the code file, so it may lack some relevant dependencies.
Now for the CUDA kernel provided by the user, you need to determine whether this CUDA kernel lacks relevant dependencies.
1. If it lacks standard library dependencies, please supplement them.
2. If it lacks user file dependencies, for example, user-defined classes, user-defined functions, user-defined macros, etc., attempt to rewrite it in a simple manner to resolve the dependency issues.

Please return whether the rewrite was successful. If the rewrite is successful, return the rewritten code. If you are unable to rewrite the required user dependencies, return None for this item.

Note: that the user's code where this kernel resides is unavailable. Therefore, if you think some definitions are likely defined in the user's code, you are also supposed to attempt to supplement them as part of the rewritten code.

# Prompt format

The user will provide you a JSON dictionary in the following format:

```json
{
    "kernel" : <The CUDA kernel provided by user>
}
```

# Response format

You will respond with a JSON dictionary in the following format:

```json
{
    "success": "<yes/no>",
    "reason": "<Your reasoning process>",
    "rewrite": "<The rewritten code that doesn't lack relevant dependencies/None>"
}
```
)PROMPT";

constexpr std::string_view kSerialGenText = R"PROMPT(You are an HPC engineer proficient in both CUDA and standard C++. The user will provide a self-contained CUDA kernel together with its host-side entry function. You need to produce three things:
1. A serial C++ implementation that computes exactly the same result as the CUDA code, keeping the same entry function name and signature.
2. A driver: a main function that reads the test input from standard input, calls the entry function, and prints the result to standard output. The same driver must work for both the serial implementation and the CUDA implementation.
3. A list of test inputs for the driver, each a complete standard-input payload. The inputs must exercise the entry function on varied sizes and values.

# Notes
1. The serial implementation must not use any CUDA construct; it must compile as plain C++.
2. The driver must print results deterministically, one value per line, so outputs can be compared across implementations.
3. Return every piece of code complete, without omissions.

# Prompt format

The user will provide you a JSON dictionary in the following format:

```json
{
    "kernel" : <The CUDA code provided by user>
}
```

# Response format

You will respond with a JSON dictionary in the following format:

```json
{
    "serial": "<The serial C++ implementation>",
    "driver": "<The main function driver>",
    "test_inputs": ["<standard input payload>", "..."]
}
```
)PROMPT";

const std::array<PromptTemplate, 9>& all_templates() {
    static const std::array<PromptTemplate, 9> templates = {{
        {PromptKind::reasoning, kReasoningText, {"kernel"}},
        {PromptKind::relabel, kRelabelText, {"methods", "process"}},
        {PromptKind::standard, kStandardText, {"kernel"}},
        {PromptKind::cot, kCotText, {"kernel"}},
        {PromptKind::rag, kRagText, {"source_code", "example_original", "example_optimized"}},
        {PromptKind::regrapht,
         kRegraphtText,
         {"source_code", "example.origin", "example.optimized", "example.method"}},
        {PromptKind::kernel_extract, kKernelExtractText, {"file"}},
        {PromptKind::dependency, kDependencyText, {"kernel"}},
        {PromptKind::serial_gen, kSerialGenText, {"kernel"}},
    }};
    return templates;
}

}  // namespace

const PromptTemplate& prompt_template(PromptKind kind) {
    for (const PromptTemplate& t : all_templates())
        if (t.kind == kind) return t;
    throw GatewayError(GatewayError::Kind::invalid_request, "unknown prompt kind");
}

const char* prompt_kind_name(PromptKind kind) {
    switch (kind) {
        case PromptKind::reasoning: return "reasoning";
        case PromptKind::relabel: return "relabel";
        case PromptKind::standard: return "standard";
        case PromptKind::cot: return "cot";
        case PromptKind::rag: return "rag";
        case PromptKind::regrapht: return "regrapht";
        case PromptKind::kernel_extract: return "kernel_extract";
        case PromptKind::dependency: return "dependency";
        case PromptKind::serial_gen: return "serial_gen";
    }
    return "unknown";
}

std::string render_user_payload(const PromptTemplate& tmpl, const Bindings& bindings) {
    for (const auto& [name, value] : bindings) {
        bool known = false;
        for (std::string_view p : tmpl.placeholders)
            if (p == name) {
                known = true;
                break;
            }
        if (!known)
            throw GatewayError(GatewayError::Kind::invalid_request,
                               "unknown placeholder binding '" + name + "'");
    }

    nlohmann::json payload = nlohmann::json::object();
    for (std::string_view p : tmpl.placeholders) {
        auto it = bindings.find(std::string(p));
        if (it == bindings.end())
            throw GatewayError(GatewayError::Kind::invalid_request,
                               "missing placeholder '" + std::string(p) + "'");
        // Dotted names nest.
        nlohmann::json* slot = &payload;
        std::string_view rest = p;
        for (std::size_t dot = rest.find('.'); dot != std::string_view::npos;
             dot = rest.find('.')) {
            slot = &(*slot)[std::string(rest.substr(0, dot))];
            rest = rest.substr(dot + 1);
        }
        (*slot)[std::string(rest)] = it->second;
    }

    try {
        return payload.dump();
    } catch (const nlohmann::json::type_error& e) {
        throw GatewayError(GatewayError::Kind::invalid_request,
                           std::string("binding not representable in JSON: ") + e.what());
    }
}

ChatRequest render(const PromptTemplate& tmpl, const Bindings& bindings,
                   const RequestDefaults& defaults) {
    ChatRequest req;
    req.model = defaults.model;
    req.system_prompt = std::string(tmpl.system_text);
    req.user_payload = render_user_payload(tmpl, bindings);
    req.temperature = defaults.temperature;
    req.max_tokens = defaults.max_tokens;
    return req;
}

}  // namespace regraph
