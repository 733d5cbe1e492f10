"""领域层：纯数值逻辑"""
