"""展示层：命令行与文本输出"""
