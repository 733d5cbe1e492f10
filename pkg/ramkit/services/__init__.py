"""服务层：流水线编排、评估、基准数据"""
